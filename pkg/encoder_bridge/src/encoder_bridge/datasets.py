"""Benchmark dataset registry and local loading.

The registry pins what each benchmark must look like: image shape,
class count, split sizes, label names where the dataset defines them.
Data is read from `<data_root>/<name>/<split>.npz` holding `images`
(uint8, N x C x H x W) and `labels` (integers); for the registered
benchmarks the arrays must match the registry exactly, because a
mismatched local copy is a corrupted local copy.

`--dataset some/file.npz` bypasses the registry for ad-hoc extraction:
any shape goes, labels come from the file (`label_names`) or are
synthesized as class000, class001, ...
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetInvalidError, DatasetUnavailableError

SPLITS = ("train", "test")


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    num_classes: int
    channels: int
    height: int
    width: int
    split_sizes: dict  # split -> expected record count
    label_names: tuple[str, ...] | None = None

    def labels(self) -> tuple[str, ...]:
        if self.label_names is not None:
            return self.label_names
        return tuple(f"class{i:03d}" for i in range(self.num_classes))


REGISTRY = {
    "cifar10": DatasetSpec(
        "cifar10", 10, 3, 32, 32, {"train": 50_000, "test": 10_000},
        ("airplane", "automobile", "bird", "cat", "deer",
         "dog", "frog", "horse", "ship", "truck")),
    "cifar100": DatasetSpec(
        "cifar100", 100, 3, 32, 32, {"train": 50_000, "test": 10_000}),
    "stl10": DatasetSpec(
        "stl10", 10, 3, 96, 96, {"train": 5_000, "test": 8_000},
        ("airplane", "bird", "car", "cat", "deer",
         "dog", "horse", "monkey", "ship", "truck")),
    "pneumonia": DatasetSpec(
        "pneumonia", 2, 1, 1328, 971, {"train": 5_232, "test": 624},
        ("normal", "pneumonia")),
    "melanoma": DatasetSpec(
        "melanoma", 7, 3, 600, 450, {"train": 10_015, "test": 1_513},
        ("akiec", "bcc", "bkl", "df", "mel", "nv", "vasc")),
}


@dataclass
class LoadedSplit:
    dataset: str
    split: str
    images: np.ndarray  # uint8, N x C x H x W
    labels: np.ndarray  # int64
    label_names: tuple[str, ...]


def _load_npz(path: Path) -> tuple[np.ndarray, np.ndarray, tuple | None]:
    try:
        with np.load(path, allow_pickle=False) as npz:
            images = np.asarray(npz["images"])
            labels = np.asarray(npz["labels"])
            names = tuple(str(x) for x in npz["label_names"]) \
                if "label_names" in npz else None
    except FileNotFoundError:
        raise DatasetUnavailableError(
            f"no dataset file at {path}", offending_field="dataset") \
            from None
    except (KeyError, ValueError, OSError) as exc:
        raise DatasetInvalidError(f"{path}: {exc}",
                                  offending_field="dataset") from None
    if images.ndim != 4 or images.dtype != np.uint8:
        raise DatasetInvalidError(
            f"{path}: images must be uint8 N x C x H x W, got "
            f"{images.dtype} {images.shape}", offending_field="images")
    if labels.shape != (images.shape[0],):
        raise DatasetInvalidError(
            f"{path}: labels shape {labels.shape} does not match "
            f"{images.shape[0]} images", offending_field="labels")
    return images, labels.astype(np.int64), names


def load_split(dataset: str, split: str, data_root=None) -> LoadedSplit:
    """Load one split, registry-checked for the known benchmarks."""
    if dataset.endswith(".npz"):
        images, labels, names = _load_npz(Path(dataset))
        num_classes = int(labels.max()) + 1 if len(labels) else 0
        if names is None:
            names = tuple(f"class{i:03d}" for i in range(num_classes))
        if len(labels) and not 0 <= labels.min() <= labels.max() < len(names):
            raise DatasetInvalidError(
                f"{dataset}: labels outside 0..{len(names) - 1}",
                offending_field="labels")
        return LoadedSplit(Path(dataset).stem, split, images, labels, names)

    spec = REGISTRY.get(dataset)
    if spec is None:
        raise DatasetUnavailableError(
            f"unknown dataset {dataset!r}; expected one of "
            f"{', '.join(sorted(REGISTRY))} or a path to an .npz file",
            offending_field="dataset")
    if split not in SPLITS:
        raise DatasetInvalidError(f"unknown split {split!r}",
                                  offending_field="split")
    if data_root is None:
        raise DatasetUnavailableError(
            f"dataset {dataset!r} needs --data-root pointing at local "
            f"copies", offending_field="data_root")

    images, labels, _ = _load_npz(Path(data_root) / dataset
                                  / f"{split}.npz")
    expected_shape = (spec.channels, spec.height, spec.width)
    if images.shape[1:] != expected_shape:
        raise DatasetInvalidError(
            f"{dataset}/{split}: image shape {images.shape[1:]} != "
            f"registry {expected_shape}", offending_field="images")
    if images.shape[0] != spec.split_sizes[split]:
        raise DatasetInvalidError(
            f"{dataset}/{split}: {images.shape[0]} records != registry "
            f"count {spec.split_sizes[split]}", offending_field="images")
    if len(labels) and not 0 <= labels.min() <= labels.max() \
            < spec.num_classes:
        raise DatasetInvalidError(
            f"{dataset}/{split}: labels outside 0..{spec.num_classes - 1}",
            offending_field="labels")
    return LoadedSplit(dataset, split, images, labels, spec.labels())
