"""Mutable, persistent store of labeled embedding vectors.

A Collection owns a set of live records (id, label, float32 vector,
optional source tag) sharing one dimension and one label vocabulary.
Mutations (insert / delete / relabel) are all-or-nothing, bump a
monotone generation counter, and never touch other records. Deletes are
tombstones in memory; compaction happens on save.

Readers work against immutable snapshots (`snapshot()`), so any number
of concurrent readers can coexist with one writer. Saving writes
generation-stamped EMBV1 segment files plus a JSON manifest, and
replaces the manifest atomically so a crashed save never leaves a store
that references incomplete data.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import segment as segio
from .errors import (
    CollectionExistsError,
    FormatError,
    DimensionMismatchError,
    DuplicateIdError,
    InvalidVectorError,
    LabelInvalidError,
    RecordInvalidError,
    UnknownCollectionError,
    UnknownIdError,
    ZeroNormError,
)

_MAX_ID = 2**64 - 1
_MAX_LABEL = 2**32 - 1


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    """One stored support sample: stable id, label, float32 vector."""

    id: int
    label_id: int
    vector: np.ndarray
    source_tag: str | None = None

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return (self.id == other.id
                and self.label_id == other.label_id
                and self.source_tag == other.source_tag
                and self.vector.tobytes() == other.vector.tobytes())

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class DeleteResult:
    """Outcome of a delete call: how many went, and which ids were not live."""

    deleted: int
    missing: tuple[int, ...]


class CollectionView:
    """Immutable snapshot of a collection's live records, ascending by id.

    Engine code reads only from views, so a query sees one consistent
    generation no matter what the writer does meanwhile.
    """

    def __init__(self, name, dimension, labels, generation,
                 ids, label_ids, vectors, norms, source_tags):
        self.name = name
        self.dimension = dimension
        self.labels = labels
        self.generation = generation
        self.ids = ids                  # uint64, strictly ascending
        self.label_ids = label_ids      # uint32
        self.vectors = vectors          # (n, dimension) float32
        self.norms = norms              # float64 Euclidean norms
        self.source_tags = source_tags
        self._matrix64 = None

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def matrix64(self) -> np.ndarray:
        """Float64 copy of the vectors, built lazily for similarity math."""
        if self._matrix64 is None:
            self._matrix64 = self.vectors.astype(np.float64)
        return self._matrix64

    def record(self, row: int) -> EmbeddingRecord:
        return EmbeddingRecord(
            id=int(self.ids[row]),
            label_id=int(self.label_ids[row]),
            vector=self.vectors[row].copy(),
            source_tag=self.source_tags[row],
        )


class Collection:
    """A named, versioned set of embedding records.

    Create with :meth:`create`, reopen with :meth:`load`. All mutation
    methods take the internal lock; reads go through :meth:`snapshot`.
    """

    _INITIAL_CAPACITY = 64

    def __init__(self, name: str, dimension: int, labels: Sequence[str]):
        if dimension < 1:
            raise DimensionMismatchError(
                f"dimension must be >= 1, got {dimension}",
                offending_field="dimension")
        if not labels:
            raise LabelInvalidError("label vocabulary must not be empty",
                                    offending_field="labels")
        if len(set(labels)) != len(labels):
            raise LabelInvalidError("label vocabulary contains duplicates",
                                    offending_field="labels")
        self._name = name
        self._dimension = int(dimension)
        self._labels = tuple(str(x) for x in labels)
        self._generation = 0
        self._lock = threading.Lock()

        cap = self._INITIAL_CAPACITY
        self._ids = np.zeros(cap, dtype=np.uint64)
        self._label_ids = np.zeros(cap, dtype=np.uint32)
        self._vectors = np.zeros((cap, self._dimension), dtype=np.float32)
        self._norms = np.zeros(cap, dtype=np.float64)
        self._live = np.zeros(cap, dtype=bool)
        self._tags: list[str | None] = [None] * cap
        self._rows_used = 0
        self._row_of: dict[int, int] = {}   # live id -> row
        self._view: CollectionView | None = None

    @classmethod
    def create(cls, name: str, dimension: int,
               labels: Sequence[str]) -> "Collection":
        """Create an empty collection at generation 0."""
        return cls(name, dimension, labels)

    # -- introspection ----------------------------------------------------

    @property
    def name(self) -> str:
        return self._name

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    @property
    def generation(self) -> int:
        with self._lock:
            return self._generation

    def __len__(self) -> int:
        with self._lock:
            return len(self._row_of)

    def label_index(self, label: str) -> int:
        try:
            return self._labels.index(label)
        except ValueError:
            raise LabelInvalidError(
                f"label {label!r} not in vocabulary",
                offending_field="label") from None

    # -- mutation ---------------------------------------------------------

    def insert(self, records: Iterable[EmbeddingRecord]) -> int:
        """Insert a batch atomically; returns the number inserted.

        Any invalid record rejects the whole batch, naming the first
        offender. An empty batch is a no-op and does not bump the
        generation.
        """
        batch = list(records)
        with self._lock:
            prepared = self._validate_batch(batch)
            for rid, label_id, tag, vec, norm in prepared:
                row = self._claim_row()
                self._ids[row] = rid
                self._label_ids[row] = label_id
                self._vectors[row] = vec
                self._norms[row] = norm
                self._live[row] = True
                self._tags[row] = tag
                self._row_of[rid] = row
            if prepared:
                self._bump()
            return len(prepared)

    def delete(self, ids: Iterable[int]) -> DeleteResult:
        """Tombstone the named live records. Unknown ids are reported,
        not fatal; duplicates in the request count once."""
        with self._lock:
            missing = []
            hit_rows = []
            seen = set()
            for rid in ids:
                rid = int(rid)
                if rid in seen:
                    continue
                seen.add(rid)
                row = self._row_of.get(rid)
                if row is None:
                    missing.append(rid)
                else:
                    hit_rows.append((rid, row))
            for rid, row in hit_rows:
                self._live[row] = False
                del self._row_of[rid]
            if hit_rows:
                self._bump()
            return DeleteResult(deleted=len(hit_rows), missing=tuple(missing))

    def relabel(self, record_id: int, new_label_id: int) -> int:
        """Change one record's label; returns the previous label id."""
        with self._lock:
            row = self._row_of.get(int(record_id))
            if row is None:
                raise UnknownIdError(f"id {record_id} is not live",
                                     offending_field="id")
            if not isinstance(new_label_id, (int, np.integer)) \
                    or not 0 <= new_label_id < len(self._labels):
                raise LabelInvalidError(
                    f"label_id {new_label_id!r} outside vocabulary of "
                    f"{len(self._labels)}", offending_field="label_id")
            previous = int(self._label_ids[row])
            self._label_ids[row] = new_label_id
            self._bump()
            return previous

    # -- reads ------------------------------------------------------------

    def snapshot(self) -> CollectionView:
        """Consistent view of the live records in ascending-id order."""
        with self._lock:
            if self._view is not None:
                return self._view
            live_rows = np.flatnonzero(self._live[: self._rows_used])
            ids = self._ids[live_rows]
            order = np.argsort(ids, kind="stable")
            rows = live_rows[order]
            view = CollectionView(
                name=self._name,
                dimension=self._dimension,
                labels=self._labels,
                generation=self._generation,
                ids=self._ids[rows].copy(),
                label_ids=self._label_ids[rows].copy(),
                vectors=self._vectors[rows].copy(),
                norms=self._norms[rows].copy(),
                source_tags=tuple(self._tags[r] for r in rows),
            )
            self._view = view
            return view

    def scan(self) -> Iterator[EmbeddingRecord]:
        """Yield every live record exactly once, ascending by id."""
        view = self.snapshot()
        for row in range(len(view)):
            yield view.record(row)

    # -- persistence ------------------------------------------------------

    def save(self, store_dir: Path | str) -> segio.Manifest:
        """Persist to a directory; returns the written manifest.

        Live records land compacted, ascending by id, in one
        generation-stamped segment. The manifest rename is the commit
        point; stale segment files are removed afterwards, best effort.
        """
        store_dir = Path(store_dir)
        store_dir.mkdir(parents=True, exist_ok=True)
        view = self.snapshot()

        seg_name = f"segment-{view.generation:010d}-00000.embv"
        info = segio.write_segment(
            store_dir / seg_name,
            ((int(view.ids[i]), int(view.label_ids[i]), view.source_tags[i],
              view.vectors[i]) for i in range(len(view))),
            self._dimension,
        )
        manifest = segio.Manifest(
            format_version=segio.FORMAT_VERSION,
            name=self._name,
            dimension=self._dimension,
            labels=self._labels,
            segments=(info,),
            generation=view.generation,
        )
        segio.write_manifest(store_dir / segio.MANIFEST_NAME, manifest)

        for stale in store_dir.glob("segment-*.embv"):
            if stale.name != seg_name:
                try:
                    stale.unlink()
                except OSError:
                    pass
        return manifest

    @classmethod
    def load(cls, path: Path | str) -> "Collection":
        """Load a collection from a store directory or manifest path.

        Verifies every segment checksum and every record invariant;
        refuses to load anything partial or corrupt.
        """
        mpath = segio.manifest_path(path)
        if not mpath.exists():
            raise UnknownCollectionError(f"no manifest at {mpath}",
                                         offending_field="path")
        manifest = segio.read_manifest(mpath)
        coll = cls(manifest.name, manifest.dimension, manifest.labels)
        records = []
        for info in manifest.segments:
            ids, label_ids, tags, vectors = segio.read_segment(
                mpath.parent / info.path, expected_crc=info.crc32c)
            if info.count != len(ids):
                raise FormatError(
                    f"{info.path}: manifest count {info.count} does not "
                    f"match segment count {len(ids)}",
                    offending_field="segments")
            if vectors.shape[1] != manifest.dimension:
                raise DimensionMismatchError(
                    f"{info.path}: segment dimension {vectors.shape[1]} != "
                    f"manifest dimension {manifest.dimension}",
                    offending_field="dimension")
            for i in range(len(ids)):
                records.append(EmbeddingRecord(
                    id=int(ids[i]), label_id=int(label_ids[i]),
                    vector=vectors[i], source_tag=tags[i]))
        coll.insert(records)
        coll._generation = manifest.generation
        coll._view = None
        return coll

    # -- internals --------------------------------------------------------

    def _bump(self) -> None:
        self._generation += 1
        self._view = None

    def _claim_row(self) -> int:
        if self._rows_used == len(self._ids):
            self._grow()
        row = self._rows_used
        self._rows_used += 1
        return row

    def _grow(self) -> None:
        cap = max(self._INITIAL_CAPACITY, 2 * len(self._ids))
        for attr in ("_ids", "_label_ids", "_norms", "_live"):
            old = getattr(self, attr)
            new = np.zeros(cap, dtype=old.dtype)
            new[: len(old)] = old
            setattr(self, attr, new)
        vecs = np.zeros((cap, self._dimension), dtype=np.float32)
        vecs[: len(self._vectors)] = self._vectors
        self._vectors = vecs
        self._tags.extend([None] * (cap - len(self._tags)))

    def _validate_batch(self, batch):
        prepared = []
        batch_ids = set()
        for pos, rec in enumerate(batch):
            where = f"record {pos} (id {rec.id})"
            rid = int(rec.id)
            if not 0 <= rid <= _MAX_ID:
                raise RecordInvalidError(
                    f"{where}: id outside unsigned 64-bit range",
                    offending_field="id")
            if rid in self._row_of or rid in batch_ids:
                raise DuplicateIdError(f"{where}: id already live",
                                       offending_field="id")
            if not 0 <= int(rec.label_id) <= _MAX_LABEL or \
                    int(rec.label_id) >= len(self._labels):
                raise LabelInvalidError(
                    f"{where}: label_id {rec.label_id} outside vocabulary "
                    f"of {len(self._labels)}", offending_field="label_id")
            vec = np.asarray(rec.vector, dtype=np.float32)
            if vec.ndim != 1 or vec.shape[0] != self._dimension:
                raise DimensionMismatchError(
                    f"{where}: vector length {vec.shape} != collection "
                    f"dimension {self._dimension}", offending_field="vector")
            if not np.all(np.isfinite(vec)):
                raise InvalidVectorError(
                    f"{where}: vector has NaN or infinite components",
                    offending_field="vector")
            v64 = vec.astype(np.float64)
            norm = float(np.sqrt(np.dot(v64, v64)))
            if norm == 0.0:
                raise ZeroNormError(f"{where}: vector norm is zero",
                                    offending_field="vector")
            batch_ids.add(rid)
            # empty tag and no tag are the same thing on disk; normalize
            # here so a save/load round trip is an identity
            prepared.append((rid, int(rec.label_id), rec.source_tag or None,
                             vec, norm))
        return prepared


def match_ids(collection: Collection, predicate: str) -> list[int]:
    """Ids of live records matching `label=NAME` or `source_tag=TAG`."""
    key, sep, value = predicate.partition("=")
    if not sep:
        raise LabelInvalidError(
            f"predicate {predicate!r} must look like label=X or "
            f"source_tag=Y", offending_field="predicate")
    view = collection.snapshot()
    if key == "label":
        label_id = collection.label_index(value)
        rows = np.flatnonzero(view.label_ids == label_id)
        return [int(view.ids[r]) for r in rows]
    if key == "source_tag":
        return [int(view.ids[r]) for r in range(len(view))
                if view.source_tags[r] == value]
    raise LabelInvalidError(
        f"unknown predicate field {key!r}", offending_field="predicate")


class CollectionRegistry:
    """Name-keyed set of collections with unique-name enforcement."""

    def __init__(self):
        self._collections: dict[str, Collection] = {}
        self._lock = threading.Lock()

    def create_collection(self, name: str, dimension: int,
                          labels: Sequence[str]) -> Collection:
        with self._lock:
            if name in self._collections:
                raise CollectionExistsError(
                    f"collection {name!r} already exists",
                    offending_field="name")
            coll = Collection.create(name, dimension, labels)
            self._collections[name] = coll
            return coll

    def add(self, collection: Collection) -> None:
        with self._lock:
            if collection.name in self._collections:
                raise CollectionExistsError(
                    f"collection {collection.name!r} already exists",
                    offending_field="name")
            self._collections[collection.name] = collection

    def get(self, name: str) -> Collection:
        with self._lock:
            try:
                return self._collections[name]
            except KeyError:
                raise UnknownCollectionError(
                    f"no collection named {name!r}",
                    offending_field="name") from None

    def names(self) -> list[str]:
        with self._lock:
            return sorted(self._collections)


def create_collection(name: str, dimension: int,
                      labels: Sequence[str]) -> Collection:
    """Create an empty collection (module-level convenience)."""
    return Collection.create(name, dimension, labels)
