"""Foreground mask post-processing and the inpainting input convention.

Continuous segmentation scores are thresholded at 0.45 (below 0.5 on
purpose, so borderline pixels count as foreground and get removed rather
than leak into the background completion), then dilated with a cross-shaped
element 5 pixels across to also remove fringe pixels around object borders.
Masked RGB-D inputs are normalized per domain to [-1, 1] and holes are
marked with the sentinel value -2.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError

DEFAULT_THRESHOLD = 0.45
DEFAULT_DILATE_SIZE = 5
SENTINEL = -2.0
DEFAULT_MAX_DEPTH_M = 10.0


def threshold_scores(scores: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Binarize a [0, 1] score map; score >= threshold means foreground."""
    scores = np.asarray(scores, dtype=np.float64)
    if not (0.0 < threshold < 1.0):
        raise InvalidInputError(f"threshold must lie in (0, 1), got {threshold}")
    if np.any(scores < 0) or np.any(scores > 1) or not np.all(np.isfinite(scores)):
        raise InvalidInputError("scores must lie in [0, 1]")
    return scores >= threshold


def cross_element(size: int) -> np.ndarray:
    """Plus-shaped structuring element spanning `size` pixels along each axis."""
    if size < 1 or size % 2 == 0:
        raise InvalidInputError(f"structuring element size must be odd and >= 1, got {size}")
    el = np.zeros((size, size), dtype=bool)
    el[size // 2, :] = True
    el[:, size // 2] = True
    return el


def dilate_cross(mask: np.ndarray, size: int = DEFAULT_DILATE_SIZE) -> np.ndarray:
    """Dilate a boolean mask with the cross element; the image border clips it."""
    mask = np.asarray(mask, dtype=bool)
    el = cross_element(size)
    if size == 1:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=el)


def normalize_color(color: np.ndarray) -> np.ndarray:
    """Map 8-bit color to [-1, 1]."""
    return np.asarray(color, dtype=np.float64) / 127.5 - 1.0


def denormalize_color(norm: np.ndarray) -> np.ndarray:
    """Map [-1, 1] color back to 8-bit, rounding and clipping."""
    return np.clip(np.round((np.asarray(norm) + 1.0) * 127.5), 0, 255).astype(np.uint8)


def normalize_depth(depth: np.ndarray, max_depth: float = DEFAULT_MAX_DEPTH_M) -> np.ndarray:
    """Map metric depth in [0, max_depth] to [-1, 1]; deeper values clip to 1."""
    if max_depth <= 0:
        raise InvalidInputError(f"max_depth must be positive, got {max_depth}")
    return np.clip(np.asarray(depth, dtype=np.float64) / max_depth, 0.0, 1.0) * 2.0 - 1.0


def denormalize_depth(norm: np.ndarray, max_depth: float = DEFAULT_MAX_DEPTH_M) -> np.ndarray:
    """Inverse of normalize_depth."""
    return (np.asarray(norm, dtype=np.float64) + 1.0) * 0.5 * max_depth


def apply_mask(
    color: np.ndarray,
    depth: np.ndarray,
    mask: np.ndarray,
    sentinel: float = SENTINEL,
) -> tuple[np.ndarray, np.ndarray]:
    """Stamp the sentinel into mask pixels of normalized color and depth planes.

    Inputs are expected in [-1, 1]; unmasked positions pass through unchanged,
    so applying the same mask twice is a no-op.
    """
    color = np.asarray(color, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if depth.shape != mask.shape or color.shape[:2] != mask.shape:
        raise InvalidInputError(
            f"mask {mask.shape} does not match color {color.shape} / depth {depth.shape}"
        )
    out_color = color.copy()
    out_depth = depth.copy()
    out_color[mask] = sentinel
    out_depth[mask] = sentinel
    return out_color, out_depth
