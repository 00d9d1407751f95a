"""Shared fixtures: deterministic RNG and synthetic image builders."""

import numpy as np
import pytest

from lesionkit.categories import CATEGORY_NAMES
from lesionkit.datamodel import GroundTruthSet, PredictionSet


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def bordered_image():
    """Factory for content-on-black test frames.

    Returns (image, (left, top, right, bottom)) where the box marks the
    bright content region, right/bottom exclusive.
    """

    def make(width=100, height=100, left=10, top=10, right=10, bottom=10, value=200):
        img = np.zeros((height, width, 3), dtype=np.uint8)
        img[top : height - bottom, left : width - right] = value
        return img, (left, top, width - right, height - bottom)

    return make


@pytest.fixture
def prediction_set(rng):
    def make(n=12, values=None, prefix="img"):
        ids = tuple(f"{prefix}_{i:03d}" for i in range(n))
        if values is None:
            values = rng.random((n, 9))
        return PredictionSet(ids, np.asarray(values, dtype=np.float64))

    return make


@pytest.fixture
def truth_set(rng):
    def make(n=12, labels=None, prefix="img"):
        ids = tuple(f"{prefix}_{i:03d}" for i in range(n))
        if labels is None:
            labels = rng.integers(0, len(CATEGORY_NAMES), size=n)
        return GroundTruthSet(ids, np.asarray(labels, dtype=np.int64))

    return make
