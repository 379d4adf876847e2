"""Image preprocessing: resize, channel handling, normalization.

Each backbone declares a recipe; preprocessing is the same few steps
for all of them. Images arrive as uint8 N x C x H x W, leave as
float32 ready for the encoder:

  1. single-channel images are replicated to three channels,
  2. bicubic resize to the backbone's native square input resolution,
  3. scale to [0, 1], subtract per-channel mean, divide by std.

Bicubic interpolation goes through Pillow per image, which is slow but
deterministic and matches how the published checkpoints were
evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class Recipe:
    resize_to: int
    mean: tuple[float, float, float]
    std: tuple[float, float, float]
    interpolation: str = "bicubic"

    def to_dict(self) -> dict:
        return {"resize_to": self.resize_to, "mean": list(self.mean),
                "std": list(self.std),
                "interpolation": self.interpolation,
                "channel_replication": True, "scale": "1/255"}


def _resize_batch(images: np.ndarray, size: int) -> np.ndarray:
    if images.shape[2] == size and images.shape[3] == size:
        return images
    n, c = images.shape[:2]
    out = np.empty((n, c, size, size), dtype=np.uint8)
    for i in range(n):
        # HWC for Pillow, channels back apart afterwards
        img = Image.fromarray(np.moveaxis(images[i], 0, 2).squeeze())
        img = img.resize((size, size), Image.BICUBIC)
        resized = np.asarray(img, dtype=np.uint8)
        if resized.ndim == 2:
            resized = resized[:, :, None]
        out[i] = np.moveaxis(resized, 2, 0)
    return out


def apply_recipe(images: np.ndarray, recipe: Recipe) -> np.ndarray:
    """uint8 N x C x H x W -> normalized float32 N x 3 x S x S."""
    if images.ndim != 4:
        raise ValueError(f"expected N x C x H x W, got {images.shape}")
    if images.shape[1] == 1:
        images = np.repeat(images, 3, axis=1)
    elif images.shape[1] != 3:
        raise ValueError(f"expected 1 or 3 channels, got "
                         f"{images.shape[1]}")
    images = _resize_batch(images, recipe.resize_to)
    scaled = images.astype(np.float32) / np.float32(255.0)
    mean = np.asarray(recipe.mean, dtype=np.float32).reshape(1, 3, 1, 1)
    std = np.asarray(recipe.std, dtype=np.float32).reshape(1, 3, 1, 1)
    return (scaled - mean) / std
