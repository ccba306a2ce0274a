"""Corpus encoding: raw or pre-split text to metadata + embedding store.

The bridge writes the summarizer's documented file formats directly:

* metadata: UTF-8 JSON lines, one cluster per line, with ``id``, ``d``,
  ``documents`` / ``references`` as arrays of ``{"text", "emb_row"}``, and
  optional ``languages``;
* embedding store: header ``CEMB`` + u32 version=1 + u32 d + u64 count
  (little-endian), followed by count x d little-endian float32 values in
  (cluster, document, sentence) order with each cluster's reference
  sentences after its document sentences.

Input is JSON lines, one cluster per line::

    {"id": "c1",
     "documents": [{"text": "raw text..."} |
                   {"sentences": ["already split", ...], "lang": "en"}],
     "references": [{"text": ...} | {"sentences": [...]}]}
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .mock import mock_encode
from .splitter import split_sentences

EMB_MAGIC = b"CEMB"
EMB_VERSION = 1
_EMB_HEADER = struct.Struct("<4sIIQ")


class BridgeError(Exception):
    """Invalid input or configuration for the bridge."""


@dataclass
class BridgeConfig:
    encoder: str = "mock:512"     # "mock:<d>" or a sentence-transformers model id
    input_path: str | Path = ""
    output_prefix: str | Path = ""
    batch_size: int = 32
    language: str | None = None   # default splitting hint
    seed: int = 0


# ---------------------------------------------------------------------------
# Encoders
# ---------------------------------------------------------------------------


def make_encoder(config: BridgeConfig) -> tuple[Callable[[Sequence[str]], np.ndarray], int | None]:
    """Resolve the encoder id to a batch-encoding callable.

    Returns the callable and the dimension when known up front (mock);
    real encoders report their dimension with the first batch.
    """
    if config.encoder.startswith("mock:"):
        try:
            d = int(config.encoder.split(":", 1)[1])
        except ValueError as exc:
            raise BridgeError(f"bad mock encoder spec {config.encoder!r}") from exc
        if d < 2:
            raise BridgeError(f"mock encoder needs d >= 2, got {d}")

        def encode_batch(texts: Sequence[str]) -> np.ndarray:
            return np.stack([mock_encode(text, d, config.seed) for text in texts])

        return encode_batch, d

    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:  # pragma: no cover - optional dependency
        raise BridgeError(
            f"encoder {config.encoder!r} requires the sentence-transformers extra"
        ) from exc
    model = SentenceTransformer(config.encoder)

    def encode_batch(texts: Sequence[str]) -> np.ndarray:  # pragma: no cover
        return np.asarray(
            model.encode(list(texts), batch_size=config.batch_size,
                         show_progress_bar=False)
        )

    return encode_batch, None


# ---------------------------------------------------------------------------
# Store writing
# ---------------------------------------------------------------------------


def write_store(path: str | Path, matrix: np.ndarray) -> None:
    """Write embeddings as the CEMB binary format (little-endian f32)."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    count, d = matrix.shape
    with open(path, "wb") as fh:
        fh.write(_EMB_HEADER.pack(EMB_MAGIC, EMB_VERSION, d, count))
        fh.write(matrix.tobytes())


def _clean_sentences(payload: dict, hint: str | None) -> list[str]:
    if "sentences" in payload:
        cleaned = [" ".join(s.split()) for s in payload["sentences"]]
        return [s for s in cleaned if s]
    return split_sentences(payload.get("text", ""), payload.get("lang", hint))


def encode_corpus(config: BridgeConfig) -> tuple[Path, Path]:
    """Encode an input corpus into metadata + embedding-store files.

    Returns the two output paths (``<prefix>.jsonl``, ``<prefix>.cemb``).
    Raises :class:`BridgeError` on malformed input or any dimension
    inconsistency between batches.
    """
    encode_batch, known_d = make_encoder(config)
    input_path = Path(config.input_path)
    meta_path = Path(f"{config.output_prefix}.jsonl")
    store_path = Path(f"{config.output_prefix}.cemb")

    records: list[dict] = []
    rows: list[np.ndarray] = []
    pending_texts: list[str] = []
    pending_slots: list[dict] = []
    d_seen: int | None = known_d

    def flush() -> None:
        nonlocal d_seen
        if not pending_texts:
            return
        matrix = encode_batch(pending_texts)
        if matrix.ndim != 2 or matrix.shape[0] != len(pending_texts):
            raise BridgeError("encoder returned a malformed batch")
        if d_seen is None:
            d_seen = int(matrix.shape[1])
        elif matrix.shape[1] != d_seen:
            raise BridgeError(
                f"encoder dimension changed from {d_seen} to {matrix.shape[1]}"
            )
        for slot, vector in zip(pending_slots, matrix):
            slot["emb_row"] = len(rows)
            rows.append(np.asarray(vector, dtype=np.float64))
        pending_texts.clear()
        pending_slots.clear()

    def add_sentence(text: str) -> dict:
        slot = {"text": text, "emb_row": -1}
        pending_texts.append(text)
        pending_slots.append(slot)
        if len(pending_texts) >= config.batch_size:
            flush()
        return slot

    with open(input_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeError(f"line {line_no}: malformed JSON ({exc})") from exc
            if "id" not in obj:
                raise BridgeError(f"line {line_no}: cluster record without an id")
            documents = []
            languages = []
            any_language = False
            for doc in obj.get("documents", []):
                sentences = _clean_sentences(doc, config.language)
                documents.append([add_sentence(text) for text in sentences])
                lang = doc.get("lang", config.language)
                languages.append(lang or "")
                any_language = any_language or bool(lang)
            references = []
            for ref in obj.get("references", []):
                sentences = _clean_sentences(ref, config.language)
                references.append([add_sentence(text) for text in sentences])
            record = {
                "id": str(obj["id"]),
                "d": None,  # patched after the final flush
                "documents": documents,
                "references": references,
            }
            if any_language:
                record["languages"] = languages
            records.append(record)
    flush()

    if d_seen is None:
        # only reachable with a real encoder and zero sentences
        raise BridgeError("cannot determine the embedding dimension: no sentences")
    for record in records:
        record["d"] = d_seen

    with open(meta_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    write_store(store_path, np.stack(rows) if rows else np.zeros((0, d_seen)))
    return meta_path, store_path
