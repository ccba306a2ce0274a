"""Data model, file formats and preprocessing for multi-document clusters.

A corpus split is stored as two companion files:

* a UTF-8 JSON-lines metadata file, one cluster per line, where every
  sentence references a row of the embedding store by global index;
* a binary embedding store (magic ``CEMB``) holding all sentence
  embeddings as little-endian float32 rows.

Both formats are streamable, language neutral and bit-exact across
platforms.  The metadata schema per line is::

    {"id": str,
     "d": int,                      # embedding dimension (checked vs store)
     "documents": [[{"text": str, "emb_row": int, "pos": int}, ...], ...],
     "references": [[{"text": str, "emb_row": int}, ...], ...],
     "languages": [str, ...] | null}

``pos`` is optional and defaults to the sentence's ordinal within its
document; it is written explicitly so that clusters whose sentences were
filtered upstream keep their original positions across a save/load
round trip.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DataError, ValidationError

EMB_MAGIC = b"CEMB"
EMB_VERSION = 1
_EMB_HEADER = struct.Struct("<4sIIQ")  # magic, version, d, count


def word_count(text: str) -> int:
    """Number of maximal whitespace-delimited tokens in ``text``."""
    return len(text.split())


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Sentence:
    """A single source sentence with its embedding.

    ``doc_index`` and ``pos_in_doc`` are 0-based ordinals assigned when the
    cluster is first built and are never re-indexed by later filtering, so
    positional signals always reflect true article position.
    """

    doc_index: int
    pos_in_doc: int
    text: str
    embedding: np.ndarray


@dataclass(eq=False)
class SummarySentence:
    """A reference-summary sentence (no positional metadata)."""

    text: str
    embedding: np.ndarray


@dataclass(eq=False)
class ReferenceSummary:
    """An ordered list of reference-summary sentences."""

    sentences: list[SummarySentence]

    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)


@dataclass(eq=False)
class Cluster:
    """A set of related documents to be summarized jointly."""

    id: str
    documents: list[list[Sentence]]
    references: list[ReferenceSummary] = field(default_factory=list)
    languages: list[str] | None = None

    @property
    def n_sentences(self) -> int:
        return sum(len(doc) for doc in self.documents)

    @property
    def dim(self) -> int:
        for doc in self.documents:
            for s in doc:
                return int(s.embedding.shape[0])
        raise DataError(f"cluster {self.id!r} has no sentences")

    def all_sentences(self) -> list[Sentence]:
        """All sentences flattened in (doc_index, pos_in_doc) order."""
        return [s for doc in self.documents for s in doc]

    def sentence(self, index: int) -> Sentence:
        """Sentence at flat index ``index`` (document-major order)."""
        return self.all_sentences()[index]


@dataclass(eq=False)
class CrossSumDocument:
    """A single-document item used to assemble multi-document clusters."""

    id: str
    sentences: list[SummarySentence]
    summary: list[SummarySentence] = field(default_factory=list)
    language: str | None = None


# ---------------------------------------------------------------------------
# Embedding store
# ---------------------------------------------------------------------------


def write_embeddings(path: str | Path, matrix: np.ndarray) -> None:
    """Write a (count, d) matrix as a CEMB store (little-endian f32)."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise ValidationError("embedding matrix must be 2-D")
    count, d = matrix.shape
    with open(path, "wb") as fh:
        fh.write(_EMB_HEADER.pack(EMB_MAGIC, EMB_VERSION, d, count))
        fh.write(matrix.tobytes())


def read_embeddings(path: str | Path) -> np.ndarray:
    """Read a CEMB store into a read-only (count, d) float32 matrix."""
    blob = Path(path).read_bytes()
    if len(blob) < _EMB_HEADER.size:
        raise DataError(f"{path}: truncated embedding store header")
    magic, version, d, count = _EMB_HEADER.unpack_from(blob)
    if magic != EMB_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {EMB_MAGIC!r}")
    if version != EMB_VERSION:
        raise DataError(f"{path}: unsupported store version {version}")
    expected = _EMB_HEADER.size + 4 * d * count
    if len(blob) != expected:
        raise DataError(
            f"{path}: store holds {len(blob)} bytes, header implies {expected}"
        )
    matrix = np.frombuffer(blob, dtype="<f4", offset=_EMB_HEADER.size)
    matrix = matrix.reshape(count, d)
    if count and not np.isfinite(matrix).all():
        raise DataError(f"{path}: embedding store contains non-finite values")
    return matrix


# ---------------------------------------------------------------------------
# Split loading / saving
# ---------------------------------------------------------------------------


def _sentence_payloads(obj: dict, key: str, line_no: int) -> list[list[dict]]:
    groups = obj.get(key, [])
    if not isinstance(groups, list) or any(not isinstance(g, list) for g in groups):
        raise DataError(f"line {line_no}: {key!r} must be a list of lists")
    return groups


def _take_row(matrix: np.ndarray, payload: dict, line_no: int) -> np.ndarray:
    row = payload.get("emb_row")
    if not isinstance(row, int) or row < 0 or row >= matrix.shape[0]:
        raise DataError(
            f"line {line_no}: emb_row {row!r} outside store of {matrix.shape[0]} rows"
        )
    return matrix[row]


def load_split(metadata_path: str | Path, embeddings_path: str | Path) -> list[Cluster]:
    """Load a corpus split from its metadata and embedding-store files.

    Cluster and sentence ordering is identical to file order.  Malformed
    lines are reported with their 1-based line number.
    """
    matrix = read_embeddings(embeddings_path)
    clusters: list[Cluster] = []
    with open(metadata_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {line_no}: malformed JSON ({exc})") from exc
            if not isinstance(obj, dict) or "id" not in obj:
                raise DataError(f"line {line_no}: cluster record without an id")
            declared_d = obj.get("d")
            if declared_d is not None and declared_d != matrix.shape[1]:
                raise DataError(
                    f"line {line_no}: metadata declares d={declared_d} but store "
                    f"header has d={matrix.shape[1]}"
                )
            documents: list[list[Sentence]] = []
            for doc_index, doc in enumerate(_sentence_payloads(obj, "documents", line_no)):
                sentences: list[Sentence] = []
                for ordinal, payload in enumerate(doc):
                    text = payload.get("text")
                    if not isinstance(text, str) or not text.strip():
                        raise DataError(f"line {line_no}: sentence with empty text")
                    sentences.append(
                        Sentence(
                            doc_index=doc_index,
                            pos_in_doc=int(payload.get("pos", ordinal)),
                            text=text,
                            embedding=_take_row(matrix, payload, line_no),
                        )
                    )
                documents.append(sentences)
            if not documents or all(len(d) == 0 for d in documents):
                raise DataError(f"line {line_no}: cluster {obj['id']!r} has no sentences")
            references = [
                ReferenceSummary(
                    [
                        SummarySentence(p["text"], _take_row(matrix, p, line_no))
                        for p in ref
                    ]
                )
                for ref in _sentence_payloads(obj, "references", line_no)
            ]
            languages = obj.get("languages")
            clusters.append(
                Cluster(
                    id=str(obj["id"]),
                    documents=documents,
                    references=references,
                    languages=list(languages) if languages is not None else None,
                )
            )
    return clusters


def save_split(
    clusters: Sequence[Cluster],
    metadata_path: str | Path,
    embeddings_path: str | Path,
) -> None:
    """Write clusters as a metadata + embedding-store file pair.

    Rows are assigned in (cluster, document, sentence) order, with each
    cluster's reference sentences following its document sentences.
    """
    if not clusters:
        Path(metadata_path).write_text("", encoding="utf-8")
        write_embeddings(embeddings_path, np.zeros((0, 0), dtype=np.float32))
        return
    d = clusters[0].dim
    rows: list[np.ndarray] = []
    lines: list[str] = []

    def assign(embedding: np.ndarray) -> int:
        if embedding.shape != (d,):
            raise DataError(
                f"inconsistent embedding dimension {embedding.shape} (expected ({d},))"
            )
        rows.append(np.asarray(embedding, dtype="<f4"))
        return len(rows) - 1

    for cluster in clusters:
        record: dict = {
            "id": cluster.id,
            "d": d,
            "documents": [
                [
                    {"text": s.text, "emb_row": assign(s.embedding), "pos": s.pos_in_doc}
                    for s in doc
                ]
                for doc in cluster.documents
            ],
            "references": [
                [
                    {"text": s.text, "emb_row": assign(s.embedding)}
                    for s in ref.sentences
                ]
                for ref in cluster.references
            ],
        }
        if cluster.languages is not None:
            record["languages"] = cluster.languages
        lines.append(json.dumps(record, ensure_ascii=False))
    Path(metadata_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_embeddings(embeddings_path, np.stack(rows))


# ---------------------------------------------------------------------------
# Preprocessing and centroids
# ---------------------------------------------------------------------------


def preprocess_cluster(cluster: Cluster, budget: int) -> Cluster:
    """Drop duplicate and over-budget sentences ahead of selection.

    Duplicates are detected cluster-wide by byte equality of the
    whitespace-normalized text (first occurrence kept).  Sentences whose
    word count exceeds ``budget`` are removed.  Ordering is otherwise
    preserved and ``pos_in_doc`` keeps its original value.  Idempotent.
    """
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget}")
    seen: set[str] = set()
    documents: list[list[Sentence]] = []
    for doc in cluster.documents:
        kept: list[Sentence] = []
        for sentence in doc:
            normalized = " ".join(sentence.text.split())
            if not normalized:
                continue
            if word_count(sentence.text) > budget:
                continue
            if normalized in seen:
                continue
            seen.add(normalized)
            kept.append(sentence)
        documents.append(kept)
    if all(len(doc) == 0 for doc in documents):
        raise DataError(f"cluster {cluster.id!r} is empty after preprocessing")
    return Cluster(
        id=cluster.id,
        documents=documents,
        references=cluster.references,
        languages=cluster.languages,
    )


def mean_pool_cluster(cluster: Cluster) -> np.ndarray:
    """Average of per-document average sentence embeddings (two-stage mean)."""
    doc_means = []
    for doc_index, doc in enumerate(cluster.documents):
        if not doc:
            raise DataError(
                f"cluster {cluster.id!r}: document {doc_index} is empty; "
                "cannot mean-pool"
            )
        doc_means.append(
            np.mean([np.asarray(s.embedding, dtype=np.float64) for s in doc], axis=0)
        )
    return np.mean(doc_means, axis=0)


def gold_centroid(reference: ReferenceSummary) -> np.ndarray:
    """Plain average of the reference summary's sentence embeddings."""
    if not reference.sentences:
        raise DataError("reference summary has no sentences")
    return np.mean(
        [np.asarray(s.embedding, dtype=np.float64) for s in reference.sentences], axis=0
    )


def cluster_gold_centroid(cluster: Cluster) -> np.ndarray:
    """Average of per-reference gold centroids for a multi-reference cluster."""
    if not cluster.references:
        raise DataError(f"cluster {cluster.id!r} has no reference summaries")
    return np.mean([gold_centroid(ref) for ref in cluster.references], axis=0)


# ---------------------------------------------------------------------------
# Pairing-graph adaptation (single-document corpora -> MDS clusters)
# ---------------------------------------------------------------------------


class UnionFind:
    """Disjoint sets over hashable items with union by rank."""

    def __init__(self, items: Iterable[str] = ()):
        self._parent: dict[str, str] = {}
        self._rank: dict[str, int] = {}
        for item in items:
            self.add(item)

    def add(self, item: str) -> None:
        if item not in self._parent:
            self._parent[item] = item
            self._rank[item] = 0

    def find(self, item: str) -> str:
        root = item
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[item] != root:  # path compression
            self._parent[item], item = root, self._parent[item]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self._rank[ra] < self._rank[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        if self._rank[ra] == self._rank[rb]:
            self._rank[ra] += 1

    def groups(self) -> list[list[str]]:
        by_root: dict[str, list[str]] = {}
        for item in self._parent:
            by_root.setdefault(self.find(item), []).append(item)
        return list(by_root.values())


def crosssum_components(
    pairings: Sequence[tuple[str, str]], known_ids: Iterable[str]
) -> list[list[str]]:
    """Connected components of the pairing graph, singletons discarded.

    Components are returned with members sorted and ordered by smallest
    member id, which makes downstream cluster construction deterministic.
    """
    known = set(known_ids)
    uf = UnionFind()
    for a, b in pairings:
        for doc_id in (a, b):
            if doc_id not in known:
                raise DataError(f"pairing references unknown document id {doc_id!r}")
            uf.add(doc_id)
        uf.union(a, b)
    components = [sorted(group) for group in uf.groups() if len(group) > 1]
    components.sort(key=lambda group: group[0])
    return components


def interleave_reference(
    summaries: Sequence[Sequence[SummarySentence]], limit: int
) -> ReferenceSummary:
    """Round-robin merge of per-document summaries under a word limit.

    Takes sentence ``i`` from each summary in turn (input order), skipping
    exhausted summaries, and stops before appending any sentence that would
    push the cumulative word count over ``limit``.
    """
    if limit < 1:
        raise ValidationError(f"limit must be >= 1, got {limit}")
    if not summaries or all(len(s) == 0 for s in summaries):
        raise DataError("interleaving requires at least one non-empty summary")
    merged: list[SummarySentence] = []
    words = 0
    longest = max(len(s) for s in summaries)
    for i in range(longest):
        for summary in summaries:
            if i >= len(summary):
                continue
            sentence = summary[i]
            w = word_count(sentence.text)
            if words + w > limit:
                return ReferenceSummary(merged)
            merged.append(sentence)
            words += w
    return ReferenceSummary(merged)


def build_crosssum_clusters(
    pairings: Sequence[tuple[str, str]],
    documents: Mapping[str, CrossSumDocument],
    reference_limit: int = 100,
) -> list[Cluster]:
    """Aggregate paired single documents into multi-document clusters.

    Components of the pairing graph become clusters (singletons discarded),
    each with one interleaved reference summary capped at
    ``reference_limit`` words.  The smallest member id names the cluster.
    """
    clusters: list[Cluster] = []
    for member_ids in crosssum_components(pairings, documents.keys()):
        docs = [documents[doc_id] for doc_id in member_ids]
        cluster_docs: list[list[Sentence]] = []
        for doc_index, doc in enumerate(docs):
            cluster_docs.append(
                [
                    Sentence(doc_index, pos, s.text, s.embedding)
                    for pos, s in enumerate(doc.sentences)
                ]
            )
        summaries = [doc.summary for doc in docs if doc.summary]
        references: list[ReferenceSummary] = []
        if summaries:
            reference = interleave_reference(summaries, reference_limit)
            if reference.sentences:
                references.append(reference)
        languages = None
        if any(doc.language for doc in docs):
            languages = [doc.language or "" for doc in docs]
        clusters.append(
            Cluster(
                id=member_ids[0],
                documents=cluster_docs,
                references=references,
                languages=languages,
            )
        )
    return clusters


def read_pairings(path: str | Path) -> list[tuple[str, str]]:
    """Read a two-column tab-delimited file of document-id pairs."""
    pairings: list[tuple[str, str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(
                    f"{path}: line {line_no}: expected two tab-separated ids, "
                    f"got {len(parts)} fields"
                )
            pairings.append((parts[0].strip(), parts[1].strip()))
    return pairings
