"""Sentence splitting and embedding export for the summarizer's corpus formats."""

from .encode import BridgeConfig, BridgeError, encode_corpus, make_encoder, write_store
from .mock import fnv1a64, mock_encode
from .splitter import split_sentences

__version__ = "0.1.0"

__all__ = [
    "BridgeConfig",
    "BridgeError",
    "encode_corpus",
    "fnv1a64",
    "make_encoder",
    "mock_encode",
    "split_sentences",
    "write_store",
]
