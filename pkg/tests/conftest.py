from __future__ import annotations

import numpy as np
import pytest

from knnstore import Collection, EmbeddingRecord

# Acceptance tests append one "criterion: PASS/FAIL" line each; the
# summary hook replays them at the end of the run so they show up in
# captured output too.
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


LABELS4 = ("alpha", "beta", "gamma", "delta")


def make_records(n, dim, num_labels=4, seed=0, id_base=0, tag=None):
    rng = np.random.default_rng(seed)
    vectors = rng.normal(size=(n, dim)).astype(np.float32)
    label_ids = rng.integers(0, num_labels, size=n)
    return [EmbeddingRecord(id=id_base + i, label_id=int(label_ids[i]),
                            vector=vectors[i], source_tag=tag)
            for i in range(n)]


def make_collection(n=20, dim=8, labels=LABELS4, seed=0, name="test"):
    coll = Collection.create(name, dim, labels)
    coll.insert(make_records(n, dim, num_labels=len(labels), seed=seed))
    return coll


@pytest.fixture
def collection():
    return make_collection()
