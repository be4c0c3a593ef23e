"""Shared test helpers."""

import numpy as np

from framefuse import FrameFeatures
from framefuse.features import _block_offset


def uneven_planted(sizes, n_patches, dim, sigma, seed):
    """Planted contiguous blocks like the synthetic generator, but with
    caller-chosen (possibly unequal) block lengths."""
    rng = np.random.default_rng(seed)
    scale = (10.0 * sigma + 1.0) * np.sqrt(dim)
    chunks, labels = [], []
    for b, size in enumerate(sizes):
        texture = rng.standard_normal((n_patches, dim))
        texture -= texture.mean(axis=0, keepdims=True)
        base = texture + _block_offset(b, dim, scale)
        chunks.append(base + sigma * rng.standard_normal((size, n_patches, dim)))
        labels += [b] * size
    return FrameFeatures(np.concatenate(chunks).astype(np.float32)), np.array(labels)
