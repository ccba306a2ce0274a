"""From-scratch ROUGE-1/2/L with multi-reference averaging and bootstrap CIs.

Tokenization lowercases and splits on any non-alphanumeric character
(Unicode-aware), with no stemming and no stopword removal, which keeps the
scores language neutral.  Multi-reference aggregation averages the
per-reference scores; a best-match mode is available behind a flag.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

AGGREGATES = ("average", "best")


@dataclass(frozen=True)
class RougeScore:
    recall: float
    precision: float
    f1: float

    @staticmethod
    def from_counts(match: int, ref_total: int, cand_total: int) -> "RougeScore":
        recall = match / ref_total if ref_total > 0 else 0.0
        precision = match / cand_total if cand_total > 0 else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        return RougeScore(recall, precision, f1)


@dataclass(frozen=True)
class BootstrapSummary:
    mean: float
    ci_low: float
    ci_high: float
    iterations: int
    confidence: float


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens; everything else is a separator."""
    return _TOKEN_RE.findall(text.lower())


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _average(scores: Sequence[RougeScore], aggregate: str) -> RougeScore:
    if aggregate == "best":
        return max(scores, key=lambda s: s.f1)
    return RougeScore(
        recall=float(np.mean([s.recall for s in scores])),
        precision=float(np.mean([s.precision for s in scores])),
        f1=float(np.mean([s.f1 for s in scores])),
    )


def rouge_n(
    candidate: str,
    references: Sequence[str],
    n: int,
    aggregate: str = "average",
) -> RougeScore:
    """Clipped n-gram overlap against one or more references.

    A reference shorter than ``n`` tokens scores zero and is flagged via a
    warning, mirroring a zero-denominator in the recall.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if not references:
        raise ValidationError("at least one reference is required")
    if aggregate not in AGGREGATES:
        raise ValidationError(f"aggregate must be one of {AGGREGATES}")
    cand_counts = _ngram_counts(tokenize(candidate), n)
    cand_total = sum(cand_counts.values())
    per_reference: list[RougeScore] = []
    for reference in references:
        ref_counts = _ngram_counts(tokenize(reference), n)
        ref_total = sum(ref_counts.values())
        if ref_total == 0:
            logger.warning(
                "reference with fewer than %d tokens scores zero for ROUGE-%d", n, n
            )
            per_reference.append(RougeScore(0.0, 0.0, 0.0))
            continue
        match = sum(
            min(count, cand_counts[gram]) for gram, count in ref_counts.items()
        )
        per_reference.append(RougeScore.from_counts(match, ref_total, cand_total))
    return _average(per_reference, aggregate)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0] * (len(b) + 1)
        for j, other in enumerate(b, start=1):
            if token == other:
                current[j] = previous[j - 1] + 1
            else:
                current[j] = max(previous[j], current[j - 1])
        previous = current
    return previous[-1]


def rouge_l(
    candidate: str, references: Sequence[str], aggregate: str = "average"
) -> RougeScore:
    """Longest-common-subsequence overlap over whole token sequences."""
    if not references:
        raise ValidationError("at least one reference is required")
    if aggregate not in AGGREGATES:
        raise ValidationError(f"aggregate must be one of {AGGREGATES}")
    cand_tokens = tokenize(candidate)
    per_reference = []
    for reference in references:
        ref_tokens = tokenize(reference)
        lcs = _lcs_length(cand_tokens, ref_tokens)
        per_reference.append(
            RougeScore.from_counts(lcs, len(ref_tokens), len(cand_tokens))
        )
    return _average(per_reference, aggregate)


def bootstrap_ci(
    scores: Sequence[float],
    iterations: int = 1000,
    confidence: float = 0.95,
    seed: int = 0,
) -> BootstrapSummary:
    """Percentile bootstrap over per-cluster scores; seeded and deterministic.

    The reported mean is the mean of the resampled means.  With heavily
    skewed inputs a raw percentile interval can exclude that mean, so the
    interval is widened to contain it.
    """
    if not len(scores):
        raise ValidationError("bootstrap requires at least one score")
    if not (0.0 < confidence < 1.0):
        raise ValidationError("confidence must be in (0, 1)")
    if iterations < 1:
        raise ValidationError("iterations must be >= 1")
    values = np.asarray(scores, dtype=np.float64)
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(values), size=(iterations, len(values)))
    means = values[picks].mean(axis=1)
    if np.all(means == means[0]):  # degenerate input: collapse exactly
        value = float(means[0])
        return BootstrapSummary(value, value, value, iterations, confidence)
    mean = float(means.mean())
    tail = 100.0 * (1.0 - confidence) / 2.0
    low, high = np.percentile(means, [tail, 100.0 - tail])
    return BootstrapSummary(
        mean=mean,
        ci_low=min(float(low), mean),
        ci_high=max(float(high), mean),
        iterations=iterations,
        confidence=confidence,
    )


def score_summary(candidate: str, references: Sequence[str]) -> dict[str, RougeScore]:
    """ROUGE-1/2/L for one candidate; keys are R1, R2, RL."""
    return {
        "R1": rouge_n(candidate, references, 1),
        "R2": rouge_n(candidate, references, 2),
        "RL": rouge_l(candidate, references),
    }
