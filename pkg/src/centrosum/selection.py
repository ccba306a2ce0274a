"""Sentence selection: greedy baseline, beam search and greedy extension.

Candidate summaries are scored by the cosine similarity between the sum of
their sentence embeddings and a target centroid.  Beam search keeps the
globally best ``B`` partial summaries per step; a beam whose retained
expansion would exceed the word budget contributes its pre-expansion state
to the result pool and stops.  The optional greedy extension then exhausts
the remaining budget from the best beam states, skipping up to ``T``
oversized candidates.

Embeddings are used exactly as stored (no re-normalization): the score of
a summary is a function of the raw embedding sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Cluster, word_count
from .errors import DataError, NumericError, ValidationError

MODES = ("baseline-greedy", "beam-only", "beam+greedy")


@dataclass(frozen=True)
class SelectionConfig:
    """Knobs for the selection pipeline (defaults match the tuned values)."""

    n: int = 9            # pre-selection depth per document
    beam_size: int = 5    # beam width B
    window: int = 9       # oversized candidates tolerated by greedy extension (T)
    budget: int = 100     # summary word limit
    mode: str = "beam+greedy"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        if self.beam_size < 1:
            raise ValidationError(f"beam size must be >= 1, got {self.beam_size}")
        if self.window < 0:
            raise ValidationError(f"window must be >= 0, got {self.window}")
        if self.budget < 1:
            raise ValidationError(f"budget must be >= 1, got {self.budget}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class PoolEntry:
    """A candidate sentence with cached metadata for fast scoring."""

    index: int          # flat sentence index within the cluster
    doc_index: int
    pos_in_doc: int
    words: int
    embedding: np.ndarray


@dataclass(eq=False)
class SummaryState:
    """An in-progress extractive summary.

    ``chosen`` lists flat sentence indices in selection order; rendering
    re-sorts them into source order.  ``emb_sum`` accumulates the raw
    embedding sum and ``score`` is its cosine similarity to the centroid.
    """

    chosen: tuple[int, ...]
    emb_sum: np.ndarray
    words: int
    score: float

    @property
    def chosen_set(self) -> frozenset[int]:
        return frozenset(self.chosen)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise NumericError("cosine similarity of a zero-norm vector is undefined")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def preselect(cluster: Cluster, n: int) -> list[PoolEntry]:
    """First ``min(n, len)`` surviving sentences of each document.

    The pool is ordered by (doc_index, pos_in_doc); flat indices refer to
    the cluster's document-major sentence order.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    pool: list[PoolEntry] = []
    flat_index = 0
    for doc in cluster.documents:
        for position_in_pool, sentence in enumerate(doc):
            if position_in_pool < n:
                pool.append(
                    PoolEntry(
                        index=flat_index,
                        doc_index=sentence.doc_index,
                        pos_in_doc=sentence.pos_in_doc,
                        words=word_count(sentence.text),
                        embedding=np.asarray(sentence.embedding, dtype=np.float64),
                    )
                )
            flat_index += 1
    if not pool:
        raise DataError("pre-selection produced an empty candidate pool")
    return pool


# ---------------------------------------------------------------------------
# State helpers
# ---------------------------------------------------------------------------


def _initial_state(entry: PoolEntry, centroid: np.ndarray) -> SummaryState:
    emb = entry.embedding.copy()
    return SummaryState(
        chosen=(entry.index,),
        emb_sum=emb,
        words=entry.words,
        score=cosine_similarity(emb, centroid),
    )


def _extend_state(
    state: SummaryState, entry: PoolEntry, centroid: np.ndarray
) -> SummaryState:
    emb = state.emb_sum + entry.embedding
    return SummaryState(
        chosen=state.chosen + (entry.index,),
        emb_sum=emb,
        words=state.words + entry.words,
        score=cosine_similarity(emb, centroid),
    )


def _dedup_states(states: Iterable[SummaryState]) -> list[SummaryState]:
    """Collapse states with identical chosen-index sets.

    Keeps the highest score and, among equal scores, the lexicographically
    smallest selection order.
    """
    best: dict[frozenset[int], SummaryState] = {}
    for state in states:
        key = state.chosen_set
        incumbent = best.get(key)
        if (
            incumbent is None
            or state.score > incumbent.score
            or (state.score == incumbent.score and state.chosen < incumbent.chosen)
        ):
            best[key] = state
    return list(best.values())


def _sorted_states(states: Iterable[SummaryState]) -> list[SummaryState]:
    return sorted(states, key=lambda s: (-s.score, s.chosen))


# ---------------------------------------------------------------------------
# Greedy baseline
# ---------------------------------------------------------------------------


def greedy_select_baseline(
    pool: Sequence[PoolEntry],
    centroid: np.ndarray,
    budget: int,
    stop_at_overflow: bool = False,
) -> SummaryState:
    """Iterative argmax selection against a fixed centroid.

    By default the argmax at each step runs over the candidates that still
    fit the budget, so an oversized best candidate is skipped in favour of
    smaller ones.  With ``stop_at_overflow`` the argmax runs over all
    remaining candidates and selection halts as soon as the best one does
    not fit (the behaviour beam search reduces to at B=1).
    """
    if not pool:
        raise DataError("cannot select from an empty pool")
    centroid = np.asarray(centroid, dtype=np.float64)
    remaining = list(pool)
    state: SummaryState | None = None
    while remaining:
        scored = []
        for entry in remaining:
            candidate = (
                _initial_state(entry, centroid)
                if state is None
                else _extend_state(state, entry, centroid)
            )
            scored.append((candidate, entry))
        scored.sort(key=lambda ce: (-ce[0].score, ce[1].doc_index, ce[1].pos_in_doc))
        if stop_at_overflow:
            candidate, entry = scored[0]
            if candidate.words > budget:
                break
        else:
            fitting = [(c, e) for c, e in scored if c.words <= budget]
            if not fitting:
                break
            candidate, entry = fitting[0]
        state = candidate
        remaining.remove(entry)
    if state is None:
        raise DataError("no sentence fits within the budget")
    return state


# ---------------------------------------------------------------------------
# Beam search
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class _Candidate:
    state: SummaryState
    added: PoolEntry
    parents: set[int]  # indices into the live beam list


def beam_search(
    pool: Sequence[PoolEntry],
    centroid: np.ndarray,
    budget: int,
    beam_size: int,
    trace: list | None = None,
) -> list[SummaryState]:
    """Beam search over summary states; returns the scored result pool.

    Every step ranks each live beam's extensions by score (budget not
    consulted) and takes the best ``beam_size`` of them.  If any of those
    would exceed the budget, the beam's pre-expansion state is preserved in
    the result pool and that over-budget expansion goes no further; the
    fitting expansions of all beams then compete for the global top
    ``beam_size`` slots, deduplicated by chosen-index set.  With
    ``beam_size`` 1 this reduces to greedy selection that stops at the
    first non-fitting argmax.  If the search ends with nothing preserved
    (the whole pool fits the budget), the final beams form the result pool
    instead.
    """
    if not pool:
        raise DataError("cannot run beam search on an empty pool")
    if beam_size < 1:
        raise ValidationError(f"beam size must be >= 1, got {beam_size}")
    centroid = np.asarray(centroid, dtype=np.float64)
    oversized = [e for e in pool if e.words > budget]
    if oversized:
        raise DataError(
            f"{len(oversized)} pool sentences exceed the budget; "
            "preprocess the cluster first"
        )
    entries = {entry.index: entry for entry in pool}

    singles = [(_initial_state(entry, centroid), entry) for entry in pool]
    singles.sort(key=lambda ce: (-ce[0].score, ce[1].doc_index, ce[1].pos_in_doc))
    live = _dedup_states(state for state, _ in singles[:beam_size])
    live = _sorted_states(live)
    if trace is not None:
        trace.append(
            {"stage": "beam-init", "beams": [list(s.chosen) for s in live]}
        )

    preserved: list[SummaryState] = []
    exhausted: list[SummaryState] = []
    step = 0
    while live:
        step += 1
        candidates: dict[frozenset[int], _Candidate] = {}
        any_candidates = False
        for parent_idx, beam in enumerate(live):
            extensions = []
            for index, entry in entries.items():
                if index in beam.chosen_set:
                    continue
                extensions.append((_extend_state(beam, entry, centroid), entry))
            if not extensions:
                exhausted.append(beam)
                continue
            any_candidates = True
            extensions.sort(
                key=lambda ce: (-ce[0].score, ce[1].doc_index, ce[1].pos_in_doc)
            )
            top = extensions[:beam_size]
            if any(state.words > budget for state, _ in top):
                preserved.append(beam)
            for state, entry in top:
                if state.words > budget:
                    continue
                key = state.chosen_set
                incumbent = candidates.get(key)
                if incumbent is None:
                    candidates[key] = _Candidate(state, entry, {parent_idx})
                else:
                    incumbent.parents.add(parent_idx)
                    if state.score > incumbent.state.score or (
                        state.score == incumbent.state.score
                        and state.chosen < incumbent.state.chosen
                    ):
                        incumbent.state = state
                        incumbent.added = entry
        if not any_candidates:
            break
        ranked = sorted(
            candidates.values(),
            key=lambda c: (
                -c.state.score,
                c.added.doc_index,
                c.added.pos_in_doc,
                c.state.chosen,
            ),
        )
        live = _sorted_states(_dedup_states(c.state for c in ranked[:beam_size]))
        if trace is not None:
            trace.append(
                {
                    "stage": "beam-step",
                    "step": step,
                    "beams": [
                        {"chosen": list(s.chosen), "score": s.score} for s in live
                    ],
                    "preserved": len(preserved),
                }
            )

    result = preserved if preserved else exhausted
    return _sorted_states(_dedup_states(result))


# ---------------------------------------------------------------------------
# Greedy extension
# ---------------------------------------------------------------------------


def greedy_extend(
    states: Sequence[SummaryState],
    pool: Sequence[PoolEntry],
    centroid: np.ndarray,
    budget: int,
    window: int,
    trace: list | None = None,
) -> list[SummaryState]:
    """Exhaust the budget from each state with best-first candidate passes.

    The best-scoring unused sentence is appended when it fits; an oversized
    best candidate is dropped from consideration and counted, and the pass
    stops once ``window`` consecutive oversized candidates were seen or no
    candidates remain.  A fitting addition resets the counter.
    """
    centroid = np.asarray(centroid, dtype=np.float64)
    extended: list[SummaryState] = []
    for beam_no, state in enumerate(states):
        remaining = [e for e in pool if e.index not in state.chosen_set]
        skips = 0
        while skips < window and remaining:
            scored = [(_extend_state(state, e, centroid), e) for e in remaining]
            scored.sort(
                key=lambda ce: (-ce[0].score, ce[1].doc_index, ce[1].pos_in_doc)
            )
            candidate, entry = scored[0]
            remaining.remove(entry)
            if candidate.words <= budget:
                state = candidate
                skips = 0
                if trace is not None:
                    trace.append(
                        {
                            "stage": "greedy-add",
                            "beam": beam_no,
                            "added": entry.index,
                            "score": state.score,
                        }
                    )
            else:
                skips += 1
        extended.append(state)
    return extended


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------


def select_summary(
    cluster: Cluster,
    centroid: np.ndarray,
    config: SelectionConfig,
    trace: list | None = None,
) -> SummaryState:
    """Run the configured selection pipeline and return the best state."""
    pool = preselect(cluster, config.n)
    if trace is not None:
        trace.append({"stage": "preselect", "pool": [e.index for e in pool]})
    if config.mode == "baseline-greedy":
        state = greedy_select_baseline(pool, centroid, config.budget)
        if trace is not None:
            trace.append(
                {"stage": "result", "chosen": list(state.chosen), "score": state.score}
            )
        return state
    result_pool = beam_search(pool, centroid, config.budget, config.beam_size, trace)
    if config.mode == "beam-only":
        state = result_pool[0]
    else:
        seeds = result_pool[: config.beam_size]
        extended = greedy_extend(
            seeds, pool, centroid, config.budget, config.window, trace
        )
        state = _sorted_states(extended)[0]
    if trace is not None:
        trace.append(
            {"stage": "result", "chosen": list(state.chosen), "score": state.score}
        )
    return state


def summary_indices(state: SummaryState) -> list[int]:
    """Chosen sentence indices in source (doc, position) order."""
    return sorted(state.chosen)


def render_summary(cluster: Cluster, state: SummaryState) -> str:
    """Join the chosen sentences with single spaces in source order."""
    sentences = cluster.all_sentences()
    return " ".join(sentences[i].text for i in summary_indices(state))


def recompute_state(
    cluster: Cluster, chosen: Sequence[int], centroid: np.ndarray
) -> SummaryState:
    """Rebuild a state from scratch (used to validate accumulator drift)."""
    sentences = cluster.all_sentences()
    emb = np.sum(
        [np.asarray(sentences[i].embedding, dtype=np.float64) for i in chosen], axis=0
    )
    return SummaryState(
        chosen=tuple(chosen),
        emb_sum=emb,
        words=sum(word_count(sentences[i].text) for i in chosen),
        score=cosine_similarity(emb, centroid),
    )
