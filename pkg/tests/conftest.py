"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from centrosum.corpus import Cluster, ReferenceSummary, Sentence, SummarySentence


def make_sentence(doc_index: int, pos: int, text: str, embedding) -> Sentence:
    return Sentence(doc_index, pos, text, np.asarray(embedding, dtype=np.float64))


def random_cluster(
    rng: np.random.Generator,
    n_docs: int = 3,
    sentences_per_doc: tuple[int, int] = (2, 5),
    d: int = 8,
    words_range: tuple[int, int] = (4, 12),
    cluster_id: str = "cluster",
    with_reference: bool = False,
    bias: np.ndarray | None = None,
) -> Cluster:
    """A synthetic cluster with unique texts and random embeddings.

    ``bias`` mixes a shared direction into every embedding, which keeps the
    cluster mean-pool safely away from zero.
    """
    documents = []
    token = 0
    for doc_index in range(n_docs):
        n_sent = int(rng.integers(sentences_per_doc[0], sentences_per_doc[1] + 1))
        doc = []
        for pos in range(n_sent):
            n_words = int(rng.integers(words_range[0], words_range[1] + 1))
            text = " ".join(f"tok{token}_{w}" for w in range(n_words))
            token += 1
            vec = rng.normal(size=d)
            if bias is not None:
                vec = 0.6 * bias + vec
            vec = vec / np.linalg.norm(vec)
            doc.append(make_sentence(doc_index, pos, text, vec))
        documents.append(doc)
    references = []
    if with_reference:
        flat = [s for doc in documents for s in doc]
        picks = rng.choice(len(flat), size=min(2, len(flat)), replace=False)
        references.append(
            ReferenceSummary(
                [SummarySentence(flat[i].text, flat[i].embedding.copy()) for i in picks]
            )
        )
    return Cluster(id=cluster_id, documents=documents, references=references)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
