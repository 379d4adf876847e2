"""Feature-extractor backbones.

A backbone is a frozen pretrained encoder: images in, one embedding
vector per image out. The registry pins, per backbone id, the
embedding dimension, the native input resolution, and the
normalization constants its checkpoint was trained with. Those three
numbers are contract, not configuration; downstream stores are built
against them.

The published checkpoints are distributed through timm and need both
the package and a network path to the weights. ``load_backbone``
raises ``CheckpointUnavailableError`` when either is missing so
callers can tell "this environment cannot run ViT-L" apart from a bug.

``test-rp64`` is the exception: a seeded random projection that needs
nothing but numpy. It exists so the extraction pipeline can be
exercised end to end, at full dataset scale, in environments without
checkpoint access. Its embeddings are meaningless but deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CheckpointUnavailableError
from .preprocess import Recipe

# ImageNet statistics, shared by the DINOv2 and WideResNet checkpoints
_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)
# the CLIP checkpoints were trained with their own constants
_CLIP_MEAN = (0.48145466, 0.4578275, 0.40821073)
_CLIP_STD = (0.26862954, 0.26130258, 0.27577711)

_TEST_RP_SEED = 7_310_245
_TEST_RP_INPUT = 32
_TEST_RP_DIM = 64


@dataclass(frozen=True)
class BackboneSpec:
    name: str
    dim: int
    recipe: Recipe
    loader: Callable[["BackboneSpec"], "Backbone"]


@dataclass(frozen=True)
class Backbone:
    spec: BackboneSpec
    embed: Callable[[np.ndarray], np.ndarray]
    """Preprocessed float32 N x 3 x S x S -> float32 N x dim."""


def _load_timm(spec: BackboneSpec) -> Backbone:
    try:
        import timm
        import torch
    except ImportError as exc:
        raise CheckpointUnavailableError(
            f"backbone {spec.name} needs the timm package "
            f"(pip install timm torch)",
            offending_field="backbone") from exc
    try:
        model = timm.create_model(spec.name, pretrained=True,
                                  num_classes=0)
    except Exception as exc:
        raise CheckpointUnavailableError(
            f"could not fetch weights for {spec.name}: {exc}",
            offending_field="backbone") from exc
    model.eval()

    def embed(batch: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            out = model(torch.from_numpy(batch))
        features = out.numpy().astype(np.float32)
        if features.shape[1] != spec.dim:
            raise CheckpointUnavailableError(
                f"{spec.name} produced {features.shape[1]}-dim "
                f"features, registry says {spec.dim}",
                offending_field="backbone")
        return features

    return Backbone(spec=spec, embed=embed)


def _load_random_projection(spec: BackboneSpec) -> Backbone:
    flat = 3 * spec.recipe.resize_to ** 2
    rng = np.random.default_rng(_TEST_RP_SEED)
    projection = rng.standard_normal((flat, spec.dim)) / np.sqrt(flat)
    projection = projection.astype(np.float32)

    def embed(batch: np.ndarray) -> np.ndarray:
        return batch.reshape(batch.shape[0], -1) @ projection

    return Backbone(spec=spec, embed=embed)


def _spec(name: str, dim: int, size: int, mean, std,
          loader=_load_timm) -> BackboneSpec:
    return BackboneSpec(name=name, dim=dim,
                        recipe=Recipe(resize_to=size, mean=mean,
                                      std=std),
                        loader=loader)


REGISTRY: dict[str, BackboneSpec] = {s.name: s for s in (
    _spec("vit_large_patch14_dinov2.lvd142m", 1024, 518,
          _IMAGENET_MEAN, _IMAGENET_STD),
    _spec("vit_base_patch14_dinov2.lvd142m", 768, 518,
          _IMAGENET_MEAN, _IMAGENET_STD),
    _spec("vit_base_patch16_clip_224.openai", 768, 224,
          _CLIP_MEAN, _CLIP_STD),
    _spec("vit_large_patch14_clip_336.openai", 1024, 336,
          _CLIP_MEAN, _CLIP_STD),
    _spec("wide_resnet101_2", 2048, 224,
          _IMAGENET_MEAN, _IMAGENET_STD),
    _spec("test-rp64", _TEST_RP_DIM, _TEST_RP_INPUT,
          (0.5, 0.5, 0.5), (0.5, 0.5, 0.5),
          loader=_load_random_projection),
)}


def load_backbone(name: str) -> Backbone:
    spec = REGISTRY.get(name)
    if spec is None:
        known = ", ".join(sorted(REGISTRY))
        raise CheckpointUnavailableError(
            f"unknown backbone {name!r}; known: {known}",
            offending_field="backbone")
    return spec.loader(spec)
