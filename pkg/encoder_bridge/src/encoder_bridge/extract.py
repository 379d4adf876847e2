"""Extraction jobs: dataset + backbone -> embedding export.

An extraction walks one dataset split through one frozen backbone and
writes the embeddings as an EMBV1 segment plus manifest, the exchange
format the store ingests. Record ids are the dataset indices, so a
record in the store can always be traced back to the exact source
image, and re-running a job yields byte-identical output.

Images that cannot be prepared (wrong shape, wrong dtype) are skipped
rather than aborting the whole job; their ids are logged and recorded
in the manifest. A split with zero usable images still produces a
valid, ingestible empty export.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import embv
from .backbones import Backbone, load_backbone
from .datasets import SPLITS, LoadedSplit, load_split
from .errors import DatasetInvalidError
from .preprocess import apply_recipe

log = logging.getLogger("encoder_bridge.extract")

_SEGMENT_NAME = "embeddings-000.embv"


@dataclass(frozen=True)
class ExtractionJob:
    dataset: str
    split: str
    backbone: str
    out: Path
    batch_size: int = 256

    def __post_init__(self):
        if self.split not in SPLITS:
            raise DatasetInvalidError(
                f"unknown split {self.split!r}; expected one of "
                f"{', '.join(SPLITS)}", offending_field="split")
        if self.batch_size < 1:
            raise DatasetInvalidError(
                f"batch_size must be positive, got {self.batch_size}",
                offending_field="batch_size")
        object.__setattr__(self, "out", Path(self.out))

    @property
    def name(self) -> str:
        stem = self.dataset
        if stem.endswith(".npz"):
            stem = Path(stem).stem
        return f"{stem}-{self.split}"


@dataclass(frozen=True)
class ExtractionResult:
    manifest_path: Path
    segment_path: Path
    count: int
    dim: int
    skipped_ids: tuple[int, ...]


def _usable(image, expected_shape) -> bool:
    if not (isinstance(image, np.ndarray) and image.ndim == 3
            and image.shape[0] in (1, 3)
            and image.dtype == np.uint8):
        return False
    # batches are stacked, so one job processes one image geometry;
    # the first usable image fixes it
    return expected_shape is None or image.shape == expected_shape


def extract(job: ExtractionJob, *,
            data_root: str | Path | None = None) -> ExtractionResult:
    # resolve the backbone first: a missing checkpoint should fail
    # before any dataset work happens
    backbone = load_backbone(job.backbone)
    split = load_split(job.dataset, job.split, data_root=data_root)
    return extract_from_split(job, backbone, split)


def extract_from_split(job: ExtractionJob, backbone: Backbone,
                       split: LoadedSplit) -> ExtractionResult:
    """Core of ``extract``, split out so callers with their own image
    source (or deliberately broken images) can drive it directly."""
    spec = backbone.spec
    kept_ids: list[int] = []
    kept_labels: list[int] = []
    chunks: list[np.ndarray] = []
    batch: list[np.ndarray] = []

    def flush():
        if batch:
            features = backbone.embed(
                apply_recipe(np.stack(batch), spec.recipe))
            chunks.append(features.astype(np.float32, copy=False))
            batch.clear()

    skipped: list[int] = []
    expected_shape = None
    for index, image in enumerate(split.images):
        if not _usable(image, expected_shape):
            log.warning("skipping image %d of %s: not a usable "
                        "C x H x W uint8 array", index, job.name)
            skipped.append(index)
            continue
        if expected_shape is None:
            expected_shape = image.shape
        kept_ids.append(index)
        kept_labels.append(int(split.labels[index]))
        batch.append(image)
        if len(batch) == job.batch_size:
            flush()
    flush()

    if chunks:
        vectors = np.concatenate(chunks, axis=0)
    else:
        vectors = np.zeros((0, spec.dim), dtype=np.float32)
    if vectors.shape[1] != spec.dim:
        raise AssertionError(
            f"backbone produced dim {vectors.shape[1]}, "
            f"spec says {spec.dim}")

    job.out.mkdir(parents=True, exist_ok=True)
    segment_path = job.out / _SEGMENT_NAME
    entry = embv.write_segment(
        segment_path,
        ids=np.asarray(kept_ids, dtype=np.uint64),
        label_ids=np.asarray(kept_labels, dtype=np.uint32),
        vectors=vectors,
        tag=job.name)
    manifest_path = job.out / "manifest.json"
    embv.write_manifest(
        manifest_path,
        name=job.name,
        dimension=spec.dim,
        labels=split.label_names,
        segments=[entry],
        extraction={
            "dataset": job.dataset,
            "split": job.split,
            "backbone": spec.name,
            "recipe": spec.recipe.to_dict(),
            "skipped_ids": skipped,
        })
    log.info("extracted %d embeddings (%d skipped) from %s via %s",
             len(kept_ids), len(skipped), job.name, spec.name)
    return ExtractionResult(manifest_path=manifest_path,
                            segment_path=segment_path,
                            count=len(kept_ids), dim=spec.dim,
                            skipped_ids=tuple(skipped))
