"""Centroid-based extractive multi-document summarization."""

from .corpus import (
    Cluster,
    CrossSumDocument,
    ReferenceSummary,
    Sentence,
    SummarySentence,
    build_crosssum_clusters,
    cluster_gold_centroid,
    crosssum_components,
    gold_centroid,
    interleave_reference,
    load_split,
    mean_pool_cluster,
    preprocess_cluster,
    read_embeddings,
    save_split,
    word_count,
    write_embeddings,
)
from .errors import CentrosumError, DataError, NumericError, ValidationError
from .selection import (
    SelectionConfig,
    SummaryState,
    beam_search,
    cosine_similarity,
    greedy_extend,
    greedy_select_baseline,
    preselect,
    render_summary,
    select_summary,
    summary_indices,
)
from .cera import (
    AdamState,
    CeraParams,
    ForwardTrace,
    TrainConfig,
    adam_step,
    backward,
    cosine_loss,
    forward,
    init_params,
    load_checkpoint,
    normalize_cluster,
    normalize_inputs,
    save_checkpoint,
    train,
)
from .rouge import (
    BootstrapSummary,
    RougeScore,
    bootstrap_ci,
    rouge_l,
    rouge_n,
    score_summary,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BootstrapSummary",
    "CentrosumError",
    "CeraParams",
    "Cluster",
    "CrossSumDocument",
    "DataError",
    "ForwardTrace",
    "NumericError",
    "ReferenceSummary",
    "RougeScore",
    "SelectionConfig",
    "Sentence",
    "SummarySentence",
    "SummaryState",
    "TrainConfig",
    "ValidationError",
    "adam_step",
    "backward",
    "beam_search",
    "bootstrap_ci",
    "build_crosssum_clusters",
    "cluster_gold_centroid",
    "cosine_loss",
    "cosine_similarity",
    "crosssum_components",
    "forward",
    "gold_centroid",
    "greedy_extend",
    "greedy_select_baseline",
    "init_params",
    "interleave_reference",
    "load_checkpoint",
    "load_split",
    "mean_pool_cluster",
    "normalize_cluster",
    "normalize_inputs",
    "preprocess_cluster",
    "preselect",
    "read_embeddings",
    "render_summary",
    "rouge_l",
    "rouge_n",
    "save_checkpoint",
    "save_split",
    "score_summary",
    "select_summary",
    "summary_indices",
    "tokenize",
    "train",
    "word_count",
    "write_embeddings",
]
