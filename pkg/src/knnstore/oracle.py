"""Brute-force reference implementations used only by tests.

Everything here recomputes results from a plain record scan, one record
at a time, in double precision, with an ordinary sort. No code is
shared with the engine's vectorized kernels and none of it is meant to
be fast; being boring is the point. Inputs are expected at desk scale
(<= 10,000 records).
"""

from __future__ import annotations

import math

import numpy as np

from .engine import ClassificationResult, Neighbor
from .errors import EmptyCollectionError
from .store import Collection


def _record_rows(collection: Collection):
    """One scan's worth of (id, label_id, float64 vector, norm) tuples."""
    rows = []
    for rec in collection.scan():
        v = rec.vector.astype(np.float64)
        rows.append((rec.id, rec.label_id, v,
                     math.sqrt(float(np.dot(v, v)))))
    return rows


def _score(rows, query):
    q = np.asarray(query, dtype=np.float64)
    qnorm = math.sqrt(float(np.dot(q, q)))
    return [(rid, label, float(np.dot(v, q)) / (vnorm * qnorm))
            for rid, label, v, vnorm in rows]


def _top_k_scored(scored, k: int) -> tuple[Neighbor, ...]:
    scored = sorted(scored, key=lambda t: (-t[2], t[0]))
    return tuple(Neighbor(record_id=rid, label_id=label, similarity=sim)
                 for rid, label, sim in scored[:k])


def _classify_scored(scored, k: int) -> ClassificationResult:
    neighbors = _top_k_scored(scored, k)
    if not neighbors:
        raise EmptyCollectionError(
            "cannot classify against an empty collection")
    votes: dict[int, int] = {}
    sums: dict[int, float] = {}
    for nb in neighbors:
        votes[nb.label_id] = votes.get(nb.label_id, 0) + 1
        sums[nb.label_id] = sums.get(nb.label_id, 0.0) + nb.similarity

    best = None
    for label in sorted(votes):
        if best is None:
            best = label
            continue
        if votes[label] > votes[best]:
            best = label
        elif votes[label] == votes[best] and sums[label] > sums[best]:
            best = label
        # equal votes and equal sums keep the smaller label, which `best`
        # already holds because labels are visited in ascending order
    return ClassificationResult(predicted_label_id=best, neighbors=neighbors,
                                votes=votes, summed_similarity=sums)


def oracle_top_k(collection: Collection, query, k: int) -> tuple[Neighbor, ...]:
    """Full scan, full sort, then the first min(k, n) entries."""
    return _top_k_scored(_score(_record_rows(collection), query), k)


def oracle_classify(collection: Collection, query,
                    k: int) -> ClassificationResult:
    """Recount the vote from the oracle's own neighbor list."""
    return _classify_scored(_score(_record_rows(collection), query), k)


def oracle_batch_classify(collection: Collection, queries,
                          k: int) -> list[ClassificationResult]:
    """oracle_classify for each query against one scan of the records."""
    rows = _record_rows(collection)
    return [_classify_scored(_score(rows, q), k) for q in queries]


def oracle_attribution(collection: Collection, queries, true_label_ids,
                       k: int,
                       rule: str = "correct-and-matching") -> dict[int, int]:
    """Recount per-record usage from scratch, query by query."""
    rows = _record_rows(collection)
    counts = {rid: 0 for rid, _, _, _ in rows}
    for query, true_label in zip(queries, true_label_ids):
        result = _classify_scored(_score(rows, query), k)
        correct = result.predicted_label_id == int(true_label)
        if rule in ("correct-and-matching", "correct-queries") and not correct:
            continue
        for nb in result.neighbors:
            if rule == "correct-queries" or nb.label_id == int(true_label):
                counts[nb.record_id] += 1
    return counts


def oracle_accuracy(collection: Collection, queries, true_label_ids,
                    k: int) -> float:
    """Fraction of queries whose oracle prediction matches the truth."""
    rows = _record_rows(collection)
    correct = 0
    total = 0
    for query, true_label in zip(queries, true_label_ids):
        result = _classify_scored(_score(rows, query), k)
        correct += int(result.predicted_label_id == int(true_label))
        total += 1
    return correct / total
