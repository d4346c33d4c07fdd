"""Histogram-of-oriented-gradients features for 2-D images."""

from __future__ import annotations

import dataclasses

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from simdet.errors import ShapeError


@dataclasses.dataclass(frozen=True)
class HogConfig:
    """Cells of ``cell``×``cell`` pixels, unsigned orientation bins, L2-Hys over ``block``×``block`` cells."""

    cell: int = 4
    bins: int = 9
    block: int = 2
    clip: float = 0.2
    epsilon: float = 1e-5

    def __post_init__(self):
        if self.cell < 1 or self.bins < 1 or self.block < 1:
            raise ValueError(f"cell, bins and block must be positive, got {self.cell}, {self.bins}, {self.block}")


def _gradients(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # centred [-1, 0, 1] differences; border pixels get zero gradient
    gy = np.zeros_like(image)
    gx = np.zeros_like(image)
    gy[1:-1, :] = image[2:, :] - image[:-2, :]
    gx[:, 1:-1] = image[:, 2:] - image[:, :-2]
    return gx, gy


def cell_histograms(image: np.ndarray, config: HogConfig = HogConfig()) -> np.ndarray:
    """Per-cell orientation histograms of gradient magnitude, shape ``(rows, cols, bins)``.

    Bin k is centred on k·180°/bins; each pixel's magnitude is split linearly
    between its two nearest bins, wrapping at 180°.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ShapeError(f"expected a 2-D image, got shape {image.shape}")
    if any(n % config.cell for n in image.shape):
        raise ShapeError(f"image extents {image.shape} are not divisible by the cell size {config.cell}")

    gx, gy = _gradients(image)
    magnitude = np.hypot(gx, gy)
    orientation = np.mod(np.arctan2(gy, gx), np.pi)
    position = orientation / (np.pi / config.bins)
    lower = np.floor(position)
    upper_share = position - lower
    lower = lower.astype(int) % config.bins
    upper = (lower + 1) % config.bins

    rows, cols = image.shape[0] // config.cell, image.shape[1] // config.cell
    cell_row = np.arange(image.shape[0]) // config.cell
    cell_col = np.arange(image.shape[1]) // config.cell
    cell_index = (cell_row[:, np.newaxis] * cols + cell_col[np.newaxis, :]).ravel()

    hist = np.zeros((rows * cols, config.bins))
    np.add.at(hist, (cell_index, lower.ravel()), (magnitude * (1.0 - upper_share)).ravel())
    np.add.at(hist, (cell_index, upper.ravel()), (magnitude * upper_share).ravel())
    return hist.reshape(rows, cols, config.bins)


def _l2_hys(blocks: np.ndarray, config: HogConfig) -> np.ndarray:
    eps2 = config.epsilon ** 2
    normed = blocks / np.sqrt((blocks ** 2).sum(axis=-1, keepdims=True) + eps2)
    normed = np.minimum(normed, config.clip)
    return normed / np.sqrt((normed ** 2).sum(axis=-1, keepdims=True) + eps2)


def hog_features(image: np.ndarray, config: HogConfig = HogConfig()) -> np.ndarray:
    """Block-normalised HOG vector; 1764 entries for a 32×32 image with the defaults."""
    hist = cell_histograms(image, config)
    if hist.shape[0] < config.block or hist.shape[1] < config.block:
        raise ShapeError(f"{hist.shape[:2]} cells cannot hold a {config.block}×{config.block} block")
    blocks = sliding_window_view(hist, (config.block, config.block), axis=(0, 1))
    blocks = blocks.reshape(*blocks.shape[:2], -1)
    return _l2_hys(blocks, config).ravel()
