"""Evaluation protocols over a mutable support set.

Implements the accuracy measurement plus five support-set schedules:
class-incremental growth, sample-incremental growth, merge consistency
across namespaced datasets, seeded random removal, and targeted
most-valuable-record removal. Every run emits a ProtocolReport whose
steps carry plot-ready accuracy numbers, and reports round-trip through
a fixed CSV schema.

All schedules are deterministic: the RNG seed is part of the schedule
and is recorded in every report row.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .engine import EngineConfig, classify_batch, neighbor_attribution
from .errors import (
    DimensionMismatchError,
    EmptyCollectionError,
    KnnStoreError,
    ScheduleError,
)
from .store import Collection, CollectionView, EmbeddingRecord

SCHEDULE_KINDS = (
    "class-incremental",
    "sample-incremental",
    "random-removal",
    "mvf-removal",
    "merge",
)

REPORT_COLUMNS = ("protocol", "step", "support_size", "removed_or_added",
                  "class", "per_class_size", "accuracy", "k", "seed",
                  "generation")

# Records get renumbered when datasets merge; each source dataset owns a
# disjoint id block of this width.
_MERGE_ID_BLOCK = 2**48


# ---------------------------------------------------------------------------
# labeled data


@dataclass
class LabeledSet:
    """Embeddings with true labels, either a support set or a test set."""

    labels: tuple[str, ...]
    ids: np.ndarray
    label_ids: np.ndarray
    vectors: np.ndarray
    role: str = "support"
    source_tag: str | None = None

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.ids = np.asarray(self.ids, dtype=np.uint64)
        self.label_ids = np.asarray(self.label_ids, dtype=np.uint32)
        self.vectors = np.asarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2:
            raise DimensionMismatchError("vectors must be a (n, d) array",
                                         offending_field="vectors")
        n = self.vectors.shape[0]
        if len(self.ids) != n or len(self.label_ids) != n:
            raise KnnStoreError("ids, label_ids and vectors disagree on n")

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def subset(self, indices) -> "LabeledSet":
        indices = np.asarray(indices)
        return replace(self, ids=self.ids[indices],
                       label_ids=self.label_ids[indices],
                       vectors=self.vectors[indices])

    def class_indices(self, label_id: int) -> np.ndarray:
        return np.flatnonzero(self.label_ids == label_id)

    def per_class_counts(self) -> dict[str, int]:
        return {name: int(np.sum(self.label_ids == i))
                for i, name in enumerate(self.labels)}

    def to_records(self) -> list[EmbeddingRecord]:
        return [EmbeddingRecord(id=int(self.ids[i]),
                                label_id=int(self.label_ids[i]),
                                vector=self.vectors[i],
                                source_tag=self.source_tag)
                for i in range(len(self))]


def labeled_set_from_collection(collection: Collection, role: str = "support",
                                source_tag: str | None = None) -> LabeledSet:
    view = collection.snapshot()
    return LabeledSet(labels=view.labels, ids=view.ids.copy(),
                      label_ids=view.label_ids.copy(),
                      vectors=view.vectors.copy(), role=role,
                      source_tag=source_tag)


def gaussian_clusters(num_classes: int, dim: int, train_per_class: int,
                      test_per_class: int, seed: int,
                      spread: float = 0.05) -> tuple[LabeledSet, LabeledSet]:
    """Well-separated synthetic clusters: unit-norm class means, isotropic
    noise of width `spread` around each. Test ids start at 10**9."""
    rng = np.random.default_rng(seed)
    means = rng.normal(size=(num_classes, dim))
    means /= np.linalg.norm(means, axis=1, keepdims=True)
    labels = tuple(f"c{i:02d}" for i in range(num_classes))

    def draw(per_class, id_base):
        vecs = np.repeat(means, per_class, axis=0) + \
            spread * rng.normal(size=(num_classes * per_class, dim))
        label_ids = np.repeat(np.arange(num_classes), per_class)
        ids = id_base + np.arange(len(label_ids), dtype=np.uint64)
        return vecs.astype(np.float32), label_ids, ids

    tr_v, tr_l, tr_i = draw(train_per_class, np.uint64(0))
    te_v, te_l, te_i = draw(test_per_class, np.uint64(10**9))
    support = LabeledSet(labels=labels, ids=tr_i, label_ids=tr_l,
                         vectors=tr_v, role="support")
    test = LabeledSet(labels=labels, ids=te_i, label_ids=te_l,
                      vectors=te_v, role="test")
    return support, test


def build_collection(support: LabeledSet,
                     name: str = "support") -> Collection:
    coll = Collection.create(name, support.dimension, support.labels)
    coll.insert(support.to_records())
    return coll


# ---------------------------------------------------------------------------
# benchmark dataset registry


@dataclass(frozen=True)
class DatasetInfo:
    """Shape facts for the benchmark datasets the harness targets."""

    name: str
    num_classes: int
    channels: int
    height: int
    width: int
    train_count: int
    test_count: int
    label_names: tuple[str, ...] | None = None


DATASETS = {
    "cifar10": DatasetInfo(
        "cifar10", 10, 3, 32, 32, 50_000, 10_000,
        ("airplane", "automobile", "bird", "cat", "deer",
         "dog", "frog", "horse", "ship", "truck")),
    "cifar100": DatasetInfo("cifar100", 100, 3, 32, 32, 50_000, 10_000),
    "stl10": DatasetInfo(
        "stl10", 10, 3, 96, 96, 5_000, 8_000,
        ("airplane", "bird", "car", "cat", "deer",
         "dog", "horse", "monkey", "ship", "truck")),
    "pneumonia": DatasetInfo(
        "pneumonia", 2, 1, 1328, 971, 5_232, 624,
        ("normal", "pneumonia")),
    "melanoma": DatasetInfo(
        "melanoma", 7, 3, 600, 450, 10_015, 1_513,
        ("akiec", "bcc", "bkl", "df", "mel", "nv", "vasc")),
}


def dataset_info(name: str) -> DatasetInfo:
    try:
        return DATASETS[name]
    except KeyError:
        raise KnnStoreError(f"unknown dataset {name!r}") from None


# ---------------------------------------------------------------------------
# reports


@dataclass
class ProtocolStep:
    index: int
    support_size: int
    removed_or_added: str
    accuracy: float
    per_class_size: dict[str, int] = field(default_factory=dict)
    per_class_accuracy: dict[str, float | None] = field(default_factory=dict)
    generation: int = 0


@dataclass
class ProtocolReport:
    protocol: str
    k: int
    seed: int
    steps: list[ProtocolStep] = field(default_factory=list)


def mvf_removed_ids(step: ProtocolStep) -> list[int]:
    """Record ids named in a removal step's removed_or_added field."""
    body = step.removed_or_added.lstrip("-")
    return [int(part) for part in body.split(";")
            if part and not part.startswith("skip=")]


def mvf_skipped_classes(step: ProtocolStep) -> list[str]:
    body = step.removed_or_added.lstrip("-")
    return [part[len("skip="):] for part in body.split(";")
            if part.startswith("skip=")]


def report_to_csv(report: ProtocolReport) -> str:
    """The report as CSV text; parsing it back is lossless.

    One overall row per step (empty class cell), then one row per class
    the step tracked. Floats are written with repr so they parse back to
    the identical value.
    """
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(REPORT_COLUMNS)
    for step in report.steps:
        base = [report.protocol, step.index, step.support_size,
                step.removed_or_added]
        tail = [report.k, report.seed, step.generation]
        writer.writerow(base + ["", "", repr(float(step.accuracy))] + tail)
        for cls, size in step.per_class_size.items():
            acc = step.per_class_accuracy.get(cls)
            writer.writerow(
                base + [cls, size,
                        "" if acc is None else repr(float(acc))] + tail)
    return out.getvalue()


def emit_report(report: ProtocolReport, path: Path | str) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(report_to_csv(report))
    return path


def load_report(path: Path | str) -> ProtocolReport:
    """Parse a report CSV produced by emit_report."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != REPORT_COLUMNS:
            raise KnnStoreError(f"{path.name}: unexpected report header")
        rows = list(reader)

    report = None
    steps: dict[int, ProtocolStep] = {}
    for row in rows:
        (protocol, step_idx, support_size, mutation, cls, per_class_size,
         accuracy, k, seed, generation) = row
        if report is None:
            report = ProtocolReport(protocol=protocol, k=int(k),
                                    seed=int(seed))
        idx = int(step_idx)
        if cls == "":
            steps[idx] = ProtocolStep(
                index=idx, support_size=int(support_size),
                removed_or_added=mutation, accuracy=float(accuracy),
                generation=int(generation))
        else:
            step = steps[idx]
            step.per_class_size[cls] = int(per_class_size)
            step.per_class_accuracy[cls] = (
                None if accuracy == "" else float(accuracy))
    if report is None:
        report = ProtocolReport(protocol="", k=0, seed=0)
    report.steps = [steps[i] for i in sorted(steps)]
    return report


# ---------------------------------------------------------------------------
# accuracy


def _evaluate(collection: Collection, test: LabeledSet,
              cfg: EngineConfig) -> tuple[float, dict[str, float | None]]:
    """Overall and per-class accuracy of the engine on `test`."""
    if len(test) == 0:
        raise EmptyCollectionError("test set is empty",
                                   offending_field="test")
    results = classify_batch(collection, test.vectors, cfg)
    predicted = np.empty(len(test), dtype=np.int64)
    for i, res in enumerate(results):
        if isinstance(res, KnnStoreError):
            raise res
        predicted[i] = res.predicted_label_id
    correct = predicted == test.label_ids.astype(np.int64)

    per_class: dict[str, float | None] = {}
    for label_id, name in enumerate(test.labels):
        mask = test.label_ids == label_id
        n = int(mask.sum())
        per_class[name] = float(correct[mask].mean()) if n else None
    return float(correct.mean()), per_class


def evaluate_accuracy(support: LabeledSet, test: LabeledSet,
                      cfg: EngineConfig | None = None) -> float:
    """Fraction of test queries classified to their true label."""
    cfg = cfg or EngineConfig()
    if len(support) == 0:
        raise EmptyCollectionError("support set is empty",
                                   offending_field="support")
    if support.dimension != test.dimension:
        raise DimensionMismatchError(
            f"support dimension {support.dimension} != test dimension "
            f"{test.dimension}", offending_field="test")
    if support.labels != test.labels:
        raise ScheduleError("support and test label vocabularies differ",
                            offending_field="labels")
    collection = build_collection(support)
    accuracy, _ = _evaluate(collection, test, cfg)
    return accuracy


def _support_sizes(view: CollectionView) -> dict[str, int]:
    counts = {}
    for label_id, name in enumerate(view.labels):
        n = int(np.sum(view.label_ids == label_id))
        if n:
            counts[name] = n
    return counts


# ---------------------------------------------------------------------------
# protocols


def run_class_incremental(support: LabeledSet, test: LabeledSet,
                          cfg: EngineConfig | None = None,
                          class_order: Sequence[str] | None = None,
                          seed: int = 0) -> ProtocolReport:
    """Grow the label space one whole class at a time.

    Step t inserts class t's support records (touching nothing already
    stored) and scores the test subset restricted to the classes seen so
    far. The default order is the vocabulary's own.
    """
    cfg = cfg or EngineConfig()
    order = list(class_order) if class_order is not None else list(support.labels)
    if sorted(order) != sorted(support.labels):
        unknown = set(order) - set(support.labels)
        raise ScheduleError(
            f"class order must be a permutation of the vocabulary"
            + (f"; unknown classes {sorted(unknown)}" if unknown else ""),
            offending_field="class_order")
    if support.labels != test.labels:
        raise ScheduleError("support and test label vocabularies differ",
                            offending_field="labels")

    report = ProtocolReport(protocol="class-incremental", k=cfg.k, seed=seed)
    collection = Collection.create("class-incremental", support.dimension,
                                   support.labels)
    seen: list[int] = []
    for t, cls in enumerate(order, start=1):
        label_id = support.labels.index(cls)
        seen.append(label_id)
        collection.insert(support.subset(
            support.class_indices(label_id)).to_records())
        test_subset = test.subset(
            np.flatnonzero(np.isin(test.label_ids, seen)))
        accuracy, per_class = _evaluate(collection, test_subset, cfg)
        view = collection.snapshot()
        report.steps.append(ProtocolStep(
            index=t, support_size=len(view), removed_or_added=f"+{cls}",
            accuracy=accuracy, per_class_size=_support_sizes(view),
            per_class_accuracy={name: per_class[name]
                                for name in _support_sizes(view)},
            generation=view.generation))
    return report


def run_sample_incremental(support: LabeledSet, test: LabeledSet,
                           per_class_counts: Sequence[int],
                           cfg: EngineConfig | None = None,
                           seed: int = 0) -> ProtocolReport:
    """Grow the support set a few samples per class at a time.

    One seeded shuffle per class fixes the sample order; step i keeps
    the first per_class_counts[i] of each, so later steps strictly
    contain earlier ones. Counts beyond a class's population clamp to
    what exists and the clamped size is what the report records.
    """
    cfg = cfg or EngineConfig()
    counts = [int(c) for c in per_class_counts]
    if not counts or counts[0] < 1:
        raise ScheduleError("per-class counts must start at >= 1",
                            offending_field="per_class_counts")
    if any(b <= a for a, b in zip(counts, counts[1:])):
        raise ScheduleError("per-class counts must be strictly ascending",
                            offending_field="per_class_counts")
    if support.labels != test.labels:
        raise ScheduleError("support and test label vocabularies differ",
                            offending_field="labels")

    rng = np.random.default_rng(seed)
    class_orders = [rng.permutation(support.class_indices(label_id))
                    for label_id in range(len(support.labels))]

    report = ProtocolReport(protocol="sample-incremental", k=cfg.k, seed=seed)
    collection = Collection.create("sample-incremental", support.dimension,
                                   support.labels)
    previous = 0
    for i, target in enumerate(counts, start=1):
        added = []
        for order in class_orders:
            added.extend(order[previous:min(target, len(order))])
        if added:
            collection.insert(support.subset(np.array(added)).to_records())
        previous = target
        accuracy, per_class = _evaluate(collection, test, cfg)
        view = collection.snapshot()
        report.steps.append(ProtocolStep(
            index=i, support_size=len(view),
            removed_or_added=f"+{target}/class", accuracy=accuracy,
            per_class_size=_support_sizes(view),
            per_class_accuracy={name: per_class[name]
                                for name in _support_sizes(view)},
            generation=view.generation))
    return report


def _namespace_tags(datasets) -> list[str]:
    tags = []
    for i, (support, _) in enumerate(datasets):
        tags.append(support.source_tag or f"dataset{i}")
    if len(set(tags)) != len(tags):
        raise ScheduleError("duplicate source tags would collide after "
                            "namespacing", offending_field="datasets")
    return tags


def run_merge_consistency(datasets: Sequence[tuple[LabeledSet, LabeledSet]],
                          cfg: EngineConfig | None = None,
                          seed: int = 0) -> ProtocolReport:
    """Score each dataset in isolation and again on the merged store.

    Labels are namespaced `tag/name`, so vocabularies stay disjoint and
    a merged prediction is correct only for the query's own dataset's
    class. Empty datasets are legal and contribute nothing.
    """
    cfg = cfg or EngineConfig()
    tags = _namespace_tags(datasets)
    active = [(tag, support, test)
              for tag, (support, test) in zip(tags, datasets)
              if len(support) > 0]
    if not active:
        raise EmptyCollectionError("all datasets are empty",
                                   offending_field="datasets")
    dims = {support.dimension for _, support, _ in active}
    if len(dims) != 1:
        raise DimensionMismatchError(
            f"datasets disagree on dimension: {sorted(dims)}",
            offending_field="datasets")
    dim = dims.pop()

    report = ProtocolReport(protocol="merge", k=cfg.k, seed=seed)
    step_idx = 0
    for tag, support, test in active:
        collection = build_collection(support, name=f"isolated-{tag}")
        accuracy, per_class = _evaluate(collection, test, cfg)
        view = collection.snapshot()
        step_idx += 1
        report.steps.append(ProtocolStep(
            index=step_idx, support_size=len(view),
            removed_or_added=f"isolated:{tag}", accuracy=accuracy,
            per_class_size={f"{tag}/{n}": s
                            for n, s in _support_sizes(view).items()},
            per_class_accuracy={f"{tag}/{n}": per_class.get(n)
                                for n in _support_sizes(view)},
            generation=view.generation))

    # merged store: concatenated namespaced vocabularies, records re-ided
    # into disjoint blocks per source dataset
    merged_labels: list[str] = []
    offsets = []
    for tag, support, _ in active:
        offsets.append(len(merged_labels))
        merged_labels.extend(f"{tag}/{name}" for name in support.labels)
    if len(set(merged_labels)) != len(merged_labels):
        raise ScheduleError("label collision after namespacing",
                            offending_field="datasets")

    merged = Collection.create("merged", dim, merged_labels)
    for i, (tag, support, _) in enumerate(active):
        if np.any(support.ids >= _MERGE_ID_BLOCK):
            raise ScheduleError(
                f"dataset {tag!r} has ids too large to renumber for the "
                f"merged store", offending_field="datasets")
        merged.insert([
            EmbeddingRecord(
                id=i * _MERGE_ID_BLOCK + int(support.ids[j]),
                label_id=offsets[i] + int(support.label_ids[j]),
                vector=support.vectors[j], source_tag=tag)
            for j in range(len(support))])

    merged_view = merged.snapshot()
    merged_sizes = _support_sizes(merged_view)
    for i, (tag, support, test) in enumerate(active):
        namespaced_test = LabeledSet(
            labels=tuple(merged_labels), ids=test.ids,
            label_ids=test.label_ids.astype(np.uint32) + offsets[i],
            vectors=test.vectors, role="test", source_tag=tag)
        accuracy, per_class = _evaluate(merged, namespaced_test, cfg)
        own = {f"{tag}/{name}" for name in support.labels}
        step_idx += 1
        report.steps.append(ProtocolStep(
            index=step_idx, support_size=len(merged_view),
            removed_or_added=f"merged:{tag}", accuracy=accuracy,
            per_class_size={n: s for n, s in merged_sizes.items()
                            if n in own},
            per_class_accuracy={n: per_class.get(n)
                                for n in merged_sizes if n in own},
            generation=merged_view.generation))
    return report


def _removal_schedule(n: int, fractions, counts) -> list[int]:
    """Validated cumulative removal counts for a removal run."""
    if (fractions is None) == (counts is None):
        raise ScheduleError("given exactly one of fractions or counts",
                            offending_field="schedule")
    if fractions is not None:
        for f in fractions:
            if not 0.0 <= f <= 1.0:
                raise ScheduleError(f"fraction {f} outside [0, 1]",
                                    offending_field="fractions")
        cumulative = [int(round(f * n)) for f in fractions]
    else:
        cumulative = [int(c) for c in counts]
    if not cumulative:
        raise ScheduleError("removal schedule is empty",
                            offending_field="schedule")
    for c in cumulative:
        if c < 0 or c > n:
            raise ScheduleError(
                f"cumulative removal {c} exceeds live count {n}",
                offending_field="schedule")
    sizes = [n - c for c in cumulative]
    if any(b >= a for a, b in zip(sizes, sizes[1:])):
        raise ScheduleError(
            "support sizes must strictly decrease across steps",
            offending_field="schedule")
    return cumulative


def run_random_removal(support: LabeledSet, test: LabeledSet,
                       cfg: EngineConfig | None = None,
                       fractions: Sequence[float] | None = None,
                       counts: Sequence[int] | None = None,
                       seed: int = 0,
                       stratified: bool = False) -> ProtocolReport:
    """Delete seeded random support records and score after each step.

    The default draw is uniform over the whole support set; steps are
    nested prefixes of one permutation. With `stratified`, each class
    loses round(f * class size) records instead (fractions only).
    """
    cfg = cfg or EngineConfig()
    if support.labels != test.labels:
        raise ScheduleError("support and test label vocabularies differ",
                            offending_field="labels")
    if len(support) == 0:
        raise EmptyCollectionError("support set is empty",
                                   offending_field="support")
    rng = np.random.default_rng(seed)
    collection = build_collection(support, name="random-removal")

    if stratified:
        if fractions is None:
            raise ScheduleError("stratified removal takes fractions",
                                offending_field="schedule")
        class_orders = []
        for label_id in range(len(support.labels)):
            ids_c = support.ids[support.label_ids == label_id]
            class_orders.append(rng.permutation(np.sort(ids_c)))
        per_class_cum = [[int(round(f * len(order))) for order in class_orders]
                         for f in fractions]
        cumulative = [sum(row) for row in per_class_cum]
        sizes = [len(support) - c for c in cumulative]
        if any(b >= a for a, b in zip(sizes, sizes[1:])):
            raise ScheduleError(
                "support sizes must strictly decrease across steps",
                offending_field="schedule")
        step_ids = []
        prev = [0] * len(class_orders)
        for row in per_class_cum:
            batch = []
            for label_id, order in enumerate(class_orders):
                batch.extend(int(x) for x in order[prev[label_id]:row[label_id]])
            prev = row
            step_ids.append(batch)
    else:
        cumulative = _removal_schedule(len(support), fractions, counts)
        order = rng.permutation(np.sort(support.ids))
        step_ids = []
        prev = 0
        for cum in cumulative:
            step_ids.append([int(x) for x in order[prev:cum]])
            prev = cum

    report = ProtocolReport(protocol="random-removal", k=cfg.k, seed=seed)
    for i, batch in enumerate(step_ids, start=1):
        if batch:
            collection.delete(batch)
        accuracy, per_class = _evaluate(collection, test, cfg)
        view = collection.snapshot()
        report.steps.append(ProtocolStep(
            index=i, support_size=len(view),
            removed_or_added=f"-{len(batch)}", accuracy=accuracy,
            per_class_size=_support_sizes(view),
            per_class_accuracy={name: per_class[name]
                                for name in _support_sizes(view)},
            generation=view.generation))
    return report


def run_mvf_removal(support: LabeledSet, test: LabeledSet, rounds: int,
                    cfg: EngineConfig | None = None,
                    seed: int = 0) -> ProtocolReport:
    """Remove each class's most valuable record, `rounds` times.

    A record's value is how often the classifier uses it to classify a
    test query correctly (neighbor_attribution). Attribution is
    recomputed from the surviving support every round; ties fall to the
    smallest id, a class whose counts are all zero loses its smallest
    id, and an exhausted class is skipped with a note in the step.
    """
    cfg = cfg or EngineConfig()
    if rounds < 1:
        raise ScheduleError(f"rounds must be >= 1, got {rounds}",
                            offending_field="rounds")
    if support.labels != test.labels:
        raise ScheduleError("support and test label vocabularies differ",
                            offending_field="labels")
    collection = build_collection(support, name="mvf-removal")

    report = ProtocolReport(protocol="mvf-removal", k=cfg.k, seed=seed)
    for round_idx in range(1, rounds + 1):
        counts = neighbor_attribution(collection, test.vectors,
                                      test.label_ids, cfg)
        view = collection.snapshot()
        removed: list[int] = []
        skipped: list[str] = []
        for label_id, name in enumerate(support.labels):
            candidates = [int(view.ids[r])
                          for r in np.flatnonzero(view.label_ids == label_id)]
            if not candidates:
                skipped.append(name)
                continue
            removed.append(min(candidates,
                               key=lambda rid: (-counts[rid], rid)))
        if removed:
            collection.delete(removed)
        accuracy, per_class = _evaluate(collection, test, cfg)
        view = collection.snapshot()
        note = ";".join([str(r) for r in removed]
                        + [f"skip={name}" for name in skipped])
        report.steps.append(ProtocolStep(
            index=round_idx, support_size=len(view),
            removed_or_added=f"-{note}", accuracy=accuracy,
            per_class_size=_support_sizes(view),
            per_class_accuracy={name: per_class[name]
                                for name in _support_sizes(view)},
            generation=view.generation))
    return report


# ---------------------------------------------------------------------------
# schedule configs


@dataclass(frozen=True)
class Schedule:
    """A protocol run description, loadable from JSON."""

    kind: str
    seed: int = 0
    k: int = 10
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ScheduleError(
                f"unknown schedule kind {self.kind!r}; expected one of "
                f"{', '.join(SCHEDULE_KINDS)}", offending_field="kind")

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScheduleError(f"schedule is not valid JSON: {exc}")
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ScheduleError("schedule JSON must be an object with a "
                                "'kind' field", offending_field="kind")
        known = {"kind", "seed", "k", "steps"}
        extra = set(doc) - known
        if extra:
            raise ScheduleError(f"unknown schedule fields {sorted(extra)}")
        return cls(kind=doc["kind"], seed=int(doc.get("seed", 0)),
                   k=int(doc.get("k", 10)),
                   params=dict(doc.get("steps", {})))

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "seed": self.seed,
                           "k": self.k, "steps": self.params}, indent=2) + "\n"


def run_schedule(schedule: Schedule,
                 support: LabeledSet | None = None,
                 test: LabeledSet | None = None,
                 datasets: Sequence[tuple[LabeledSet, LabeledSet]] | None = None
                 ) -> ProtocolReport:
    """Dispatch a Schedule to its protocol function."""
    cfg = EngineConfig(k=schedule.k)
    p = schedule.params
    if schedule.kind == "merge":
        if datasets is None:
            raise ScheduleError("merge schedules need datasets",
                                offending_field="datasets")
        return run_merge_consistency(datasets, cfg, seed=schedule.seed)
    if support is None or test is None:
        raise ScheduleError(
            f"{schedule.kind} schedules need a support and a test set",
            offending_field="support")
    if schedule.kind == "class-incremental":
        return run_class_incremental(support, test, cfg,
                                     class_order=p.get("class_order"),
                                     seed=schedule.seed)
    if schedule.kind == "sample-incremental":
        if "per_class_counts" not in p:
            raise ScheduleError("sample-incremental needs per_class_counts",
                                offending_field="steps")
        return run_sample_incremental(support, test, p["per_class_counts"],
                                      cfg, seed=schedule.seed)
    if schedule.kind == "random-removal":
        return run_random_removal(support, test, cfg,
                                  fractions=p.get("fractions"),
                                  counts=p.get("counts"),
                                  seed=schedule.seed,
                                  stratified=bool(p.get("stratified", False)))
    return run_mvf_removal(support, test, int(p.get("rounds", 1)), cfg,
                           seed=schedule.seed)
