"""Shared fixtures."""

import pytest

from synth import clustered_images, save_npz


@pytest.fixture
def small_npz(tmp_path):
    """12 images, 3 classes, native 32x32 so test-rp64 skips resize."""
    images, labels = clustered_images(3, 4)
    return save_npz(tmp_path / "small.npz", images, labels,
                    label_names=["ash", "birch", "cedar"])
