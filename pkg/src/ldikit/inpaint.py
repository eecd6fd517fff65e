"""Background completion behind a pluggable backend interface.

The I/O contract mirrors what a learned completion model consumes: color and
depth normalized separately to [-1, 1], holes stamped with the sentinel -2,
and RGB completed independently from depth. The reference backend fills each
channel with its discrete harmonic extension (every hole pixel converges to
the mean of its 4-neighbors) via Jacobi iteration, which is deterministic
and schedule-independent. Swapping in a different backend only requires
honoring the InpaintResult contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UnfillableError
from .masking import SENTINEL, apply_mask

DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITERS = 5000


@dataclass
class InpaintRequest:
    """Normalized RGB-D with sentinel-marked holes.

    hole(p) holds exactly when every channel at p equals the sentinel; all
    other values lie in [-1, 1].
    """

    color: np.ndarray
    depth: np.ndarray
    hole: np.ndarray
    sentinel: float = SENTINEL

    def __post_init__(self):
        self.color = np.asarray(self.color, dtype=np.float64)
        self.depth = np.asarray(self.depth, dtype=np.float64)
        self.hole = np.asarray(self.hole, dtype=bool)
        h, w = self.depth.shape
        if self.color.shape != (h, w, 3) or self.hole.shape != (h, w):
            raise InvalidInputError(
                f"plane shapes disagree: color {self.color.shape}, depth {self.depth.shape}, "
                f"hole {self.hole.shape}"
            )
        all_sentinel = np.all(self.color == self.sentinel, axis=-1) & (self.depth == self.sentinel)
        if not np.array_equal(all_sentinel, self.hole):
            raise InvalidInputError("hole mask must match sentinel-marked pixels exactly")
        keep = ~self.hole
        values = np.concatenate([self.color[keep].reshape(-1), self.depth[keep]])
        if values.size and (np.any(values < -1.0) or np.any(values > 1.0)):
            raise InvalidInputError("non-hole values must be normalized to [-1, 1]")

    @classmethod
    def from_planes(cls, color, depth, mask, sentinel: float = SENTINEL) -> "InpaintRequest":
        """Stamp the mask into normalized planes and wrap them up."""
        c, d = apply_mask(color, depth, mask, sentinel)
        return cls(color=c, depth=d, hole=np.asarray(mask, dtype=bool), sentinel=sentinel)


@dataclass
class InpaintResult:
    """Completed planes in [-1, 1]; equal to the request outside the hole."""

    color: np.ndarray
    depth: np.ndarray
    backend_name: str
    converged: bool = True


def _neighbor_counts(shape: tuple[int, int]) -> np.ndarray:
    cnt = np.full(shape, 4.0)
    cnt[0, :] -= 1
    cnt[-1, :] -= 1
    cnt[:, 0] -= 1
    cnt[:, -1] -= 1
    return cnt


def diffusion_fill(
    channel: np.ndarray,
    hole: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> tuple[np.ndarray, bool]:
    """Fill hole pixels with the discrete harmonic extension of the boundary.

    Jacobi iteration: every hole pixel is replaced by the mean of its
    in-bounds 4-neighbors (previous iterate), non-hole pixels stay fixed.
    Stops when the largest update drops below tol; returns the best iterate
    and a convergence flag either way. By the discrete maximum principle the
    fill stays within the min/max of its boundary values.
    """
    channel = np.asarray(channel, dtype=np.float64)
    hole = np.asarray(hole, dtype=bool)
    if channel.shape != hole.shape:
        raise InvalidInputError("channel and hole shapes differ")
    if not np.any(hole):
        return channel.copy(), True
    boundary = channel[~hole]
    if boundary.size == 0:
        raise UnfillableError("every pixel is a hole; nothing to diffuse from")
    if not np.all(np.isfinite(boundary)):
        raise InvalidInputError("boundary values must be finite")

    vals = channel.copy()
    vals[hole] = boundary.mean()
    cnt = _neighbor_counts(channel.shape)
    converged = False
    for _ in range(max_iters):
        nsum = np.zeros_like(vals)
        nsum[1:, :] += vals[:-1, :]
        nsum[:-1, :] += vals[1:, :]
        nsum[:, 1:] += vals[:, :-1]
        nsum[:, :-1] += vals[:, 1:]
        new = nsum / cnt
        delta = np.max(np.abs(new[hole] - vals[hole]))
        vals[hole] = new[hole]
        if delta < tol:
            converged = True
            break
    return vals, converged


class DiffusionBackend:
    """Reference completion backend: independent harmonic fill per channel.

    RGB channels and depth are completed separately, matching the separate
    RGB / depth contract of the backend interface.
    """

    name = "diffusion"

    def __init__(self, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS):
        self.tol = tol
        self.max_iters = max_iters

    def complete(self, request: InpaintRequest) -> tuple[np.ndarray, np.ndarray, bool]:
        color = np.empty_like(request.color)
        converged = True
        for c in range(3):
            color[..., c], ok = diffusion_fill(
                request.color[..., c], request.hole, self.tol, self.max_iters
            )
            converged &= ok
        depth, ok = diffusion_fill(request.depth, request.hole, self.tol, self.max_iters)
        converged &= ok
        return color, depth, converged


_BACKENDS = {"diffusion": DiffusionBackend}


def get_backend(name: str, **params):
    """Look up a completion backend by its registry name."""
    try:
        return _BACKENDS[name](**params)
    except KeyError:
        raise InvalidInputError(
            f"unknown inpainting backend {name!r}; available: {sorted(_BACKENDS)}"
        ) from None


def inpaint(request: InpaintRequest, backend=None) -> InpaintResult:
    """Complete a request through a backend and enforce the output contract.

    Non-hole pixels are restored bit-exactly from the request, outputs are
    clamped to [-1, 1], and no sentinel may survive.
    """
    if backend is None:
        backend = DiffusionBackend()
    if not np.any(~request.hole):
        raise UnfillableError("request has no non-hole pixel to condition on")
    if not np.any(request.hole):
        return InpaintResult(request.color.copy(), request.depth.copy(), backend.name)

    color, depth, converged = backend.complete(request)
    color = np.clip(color, -1.0, 1.0)
    depth = np.clip(depth, -1.0, 1.0)
    keep = ~request.hole
    color[keep] = request.color[keep]
    depth[keep] = request.depth[keep]
    if np.any(color == request.sentinel) or np.any(depth == request.sentinel):
        raise InvalidInputError(f"backend {backend.name!r} left sentinel values in its output")
    return InpaintResult(color, depth, backend.name, converged)


def pair_consistency_score(color: np.ndarray, depth: np.ndarray) -> float:
    """Diagnostic agreement between color edges and depth edges, in [0, 1].

    A pixel is an edge when its forward-difference gradient magnitude
    strictly exceeds the median magnitude of its own map; the score is the
    fraction of pixels whose edge indicators agree across the two domains.
    Purely a consistency probe, never a loss.
    """
    color = np.asarray(color, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    if color.shape[:2] != depth.shape:
        raise InvalidInputError(f"color {color.shape} and depth {depth.shape} sizes differ")
    gray = color.mean(axis=-1) if color.ndim == 3 else color
    return float(np.mean(_edge_map(gray) == _edge_map(depth)))


def _edge_map(field: np.ndarray) -> np.ndarray:
    grad = np.zeros(field.shape)
    grad[:, :-1] += np.abs(np.diff(field, axis=1))
    grad[:-1, :] += np.abs(np.diff(field, axis=0))
    return grad > np.median(grad)
