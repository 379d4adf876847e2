"""Frozen-backbone feature extraction for embedding stores."""

from .backbones import REGISTRY as BACKBONES, load_backbone
from .datasets import REGISTRY as DATASETS, load_split
from .errors import (BridgeError, CheckpointUnavailableError,
                     DatasetInvalidError, DatasetUnavailableError)
from .extract import ExtractionJob, ExtractionResult, extract
from .preprocess import Recipe, apply_recipe

__all__ = [
    "BACKBONES", "BridgeError", "CheckpointUnavailableError",
    "DATASETS", "DatasetInvalidError", "DatasetUnavailableError",
    "ExtractionJob", "ExtractionResult", "Recipe", "apply_recipe",
    "extract", "load_backbone", "load_split",
]
