"""Exact top-k cosine retrieval and majority-vote classification.

Pure functions of a collection snapshot: the same generation and the
same inputs always produce bit-identical results. Dot products and
norms accumulate in double precision regardless of the float32 storage,
and all ties break deterministically — equal similarities by ascending
record id, equal votes by summed similarity then smallest label id.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyCollectionError,
    InvalidVectorError,
    KnnStoreError,
    ZeroNormError,
)
from .store import Collection, CollectionView

DEFAULT_K = 10

ATTRIBUTION_RULES = (
    # Count a (query, neighbor) pair only when the query is classified
    # correctly AND the neighbor carries the query's true label.
    "correct-and-matching",
    # Relaxation: neighbor label must match, query correctness ignored.
    "matching-neighbors",
    # Relaxation: query must be correct, every neighbor counts.
    "correct-queries",
)


@dataclass(frozen=True)
class EngineConfig:
    """Classifier settings; k defaults to 10 neighbors."""

    k: int = DEFAULT_K
    attribution_rule: str = "correct-and-matching"

    def __post_init__(self):
        if self.k < 1:
            raise KnnStoreError(f"k must be >= 1, got {self.k}")
        if self.attribution_rule not in ATTRIBUTION_RULES:
            raise KnnStoreError(
                f"unknown attribution rule {self.attribution_rule!r}")


@dataclass(frozen=True)
class Neighbor:
    record_id: int
    label_id: int
    similarity: float


@dataclass(frozen=True)
class ClassificationResult:
    """Prediction plus its audit trail: the neighbors, the per-label vote
    counts, and the per-label summed similarities used for tie-breaks."""

    predicted_label_id: int
    neighbors: tuple[Neighbor, ...]
    votes: dict[int, int]
    summed_similarity: dict[int, float]


def _prepare_query(view: CollectionView, query) -> tuple[np.ndarray, float]:
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != view.dimension:
        got = q.shape[0] if q.ndim == 1 else f"shape {q.shape}"
        raise DimensionMismatchError(
            f"query dimension {got} != collection dimension "
            f"{view.dimension}", offending_field="vector")
    if not np.all(np.isfinite(q)):
        raise InvalidVectorError("query has NaN or infinite components",
                                 offending_field="vector")
    norm = float(np.sqrt(np.dot(q, q)))
    if norm == 0.0:
        raise ZeroNormError("query vector norm is zero",
                            offending_field="vector")
    return q, norm


def _similarities(view: CollectionView, q: np.ndarray,
                  qnorm: float) -> np.ndarray:
    return (view.matrix64 @ q) / (view.norms * qnorm)


def _top_order(sims: np.ndarray, k: int) -> np.ndarray:
    # Rows are ascending by id, so a stable sort on descending similarity
    # breaks exact ties by ascending record id.
    order = np.argsort(-sims, kind="stable")
    return order[: min(k, len(sims))]


def _neighbors(view: CollectionView, sims: np.ndarray,
               order: np.ndarray) -> tuple[Neighbor, ...]:
    return tuple(
        Neighbor(record_id=int(view.ids[r]),
                 label_id=int(view.label_ids[r]),
                 similarity=float(sims[r]))
        for r in order)


def top_k(collection: Collection, query, k: int) -> tuple[Neighbor, ...]:
    """The min(k, live count) most cosine-similar records, best first.

    An empty collection yields an empty tuple; the caller decides what
    that means.
    """
    if k < 1:
        raise KnnStoreError(f"k must be >= 1, got {k}")
    view = collection.snapshot()
    q, qnorm = _prepare_query(view, query)
    if len(view) == 0:
        return ()
    sims = _similarities(view, q, qnorm)
    return _neighbors(view, sims, _top_order(sims, k))


def _classify_view(view: CollectionView, query,
                   cfg: EngineConfig) -> ClassificationResult:
    q, qnorm = _prepare_query(view, query)
    if len(view) == 0:
        raise EmptyCollectionError(
            "cannot classify against an empty collection")
    sims = _similarities(view, q, qnorm)
    order = _top_order(sims, cfg.k)
    neighbors = _neighbors(view, sims, order)

    votes: dict[int, int] = {}
    sums: dict[int, float] = {}
    for nb in neighbors:
        votes[nb.label_id] = votes.get(nb.label_id, 0) + 1
        sums[nb.label_id] = sums.get(nb.label_id, 0.0) + nb.similarity

    predicted = max(votes, key=lambda l: (votes[l], sums[l], -l))
    return ClassificationResult(
        predicted_label_id=predicted,
        neighbors=neighbors,
        votes=votes,
        summed_similarity=sums,
    )


def classify(collection: Collection, query,
             cfg: EngineConfig | None = None) -> ClassificationResult:
    """Majority vote over the query's top-k neighbors.

    Vote ties fall to the larger summed similarity, then to the smaller
    label id. Raises EmptyCollectionError rather than inventing a label.
    """
    return _classify_view(collection.snapshot(), query,
                          cfg or EngineConfig())


def classify_batch(collection: Collection, queries: Iterable,
                   cfg: EngineConfig | None = None,
                   workers: int | None = None) -> list:
    """Classify many queries against one snapshot, order preserved.

    Element i equals classify(collection, queries[i], cfg). A query that
    fails keeps its slot: the raised KnnStoreError appears at position i
    instead of aborting the batch. `workers` > 1 fans the loop out
    across threads; results are gathered back in input order.
    """
    cfg = cfg or EngineConfig()
    view = collection.snapshot()
    items = list(queries)

    def one(query):
        try:
            return _classify_view(view, query, cfg)
        except KnnStoreError as exc:
            return exc

    if workers and workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, items))
    return [one(q) for q in items]


def neighbor_attribution(collection: Collection, queries: Sequence,
                         true_label_ids: Sequence[int],
                         cfg: EngineConfig | None = None) -> dict[int, int]:
    """Per-record usage counts over a labeled query set.

    Under the default rule a record is credited once for each query that
    is classified correctly and lists the record among its top-k
    neighbors with the query's true label. Every live record appears in
    the result, zero counts included. The two relaxed rules in
    ATTRIBUTION_RULES drop one of the conditions each.
    """
    cfg = cfg or EngineConfig()
    if len(queries) != len(true_label_ids):
        raise KnnStoreError(
            f"{len(queries)} queries but {len(true_label_ids)} labels")
    view = collection.snapshot()
    if len(view) == 0:
        raise EmptyCollectionError(
            "cannot attribute against an empty collection")

    counts = {int(rid): 0 for rid in view.ids}
    rule = cfg.attribution_rule
    for query, true_label in zip(queries, true_label_ids):
        result = _classify_view(view, query, cfg)
        correct = result.predicted_label_id == int(true_label)
        if rule in ("correct-and-matching", "correct-queries") and not correct:
            continue
        for nb in result.neighbors:
            if rule == "correct-queries" or nb.label_id == int(true_label):
                counts[nb.record_id] += 1
    return counts
