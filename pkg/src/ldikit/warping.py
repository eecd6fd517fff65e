"""Forward-warping machinery shared by the LDI builder and the renderer.

A warp takes every valid source pixel, lifts it to 3D, maps it into the
target camera, and rounds the landing position to the nearest integer pixel
(half away from zero). Collisions are resolved by a deterministic z-buffer:
minimum depth first, then the smallest tie key (callers encode frame index
and row-major source index there), so any processing schedule produces
bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import CameraIntrinsics, RigidPose


def round_half_away(x) -> np.ndarray:
    """Round to nearest integer, halves away from zero. Returns int64."""
    x = np.asarray(x, dtype=np.float64)
    return (np.copysign(np.floor(np.abs(x) + 0.5), x)).astype(np.int64)


@dataclass
class WarpStats:
    """Per-warp drop accounting. Samples never raise; they are counted here."""

    source_pixels: int = 0
    dropped_invalid_depth: int = 0
    dropped_behind_camera: int = 0
    dropped_out_of_bounds: int = 0
    kept: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class GridWarp:
    """Surviving samples of one full-frame forward warp (struct of arrays).

    src_index is the flat row-major index into the source grid; target_u/v are
    integer pixel coordinates inside the target bounds; depth is the z distance
    from the target camera plane.
    """

    src_index: np.ndarray
    target_u: np.ndarray
    target_v: np.ndarray
    depth: np.ndarray
    stats: WarpStats

    def __len__(self) -> int:
        return self.src_index.size


def warp_grid(
    depth_map: np.ndarray,
    valid: np.ndarray,
    src_cam: CameraIntrinsics,
    dst_cam: CameraIntrinsics,
    dst_from_src: RigidPose,
) -> GridWarp:
    """Forward-warp a dense depth grid from the source into the target view.

    Out-of-bounds and behind-camera samples are dropped and counted, never
    raised; pixels with non-positive or invalid depth are dropped likewise.
    """
    depth_map = np.asarray(depth_map, dtype=np.float64)
    if depth_map.shape != (src_cam.height, src_cam.width):
        raise InvalidInputError(
            f"depth map shape {depth_map.shape} does not match camera "
            f"{src_cam.height}x{src_cam.width}"
        )
    valid = np.asarray(valid, dtype=bool)
    if valid.shape != depth_map.shape:
        raise InvalidInputError("valid mask shape does not match depth map")

    stats = WarpStats(source_pixels=depth_map.size)
    usable = valid & (depth_map > 0) & np.isfinite(depth_map)
    stats.dropped_invalid_depth = int(depth_map.size - np.count_nonzero(usable))

    src_idx = np.flatnonzero(usable)
    if src_idx.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return GridWarp(empty, empty.copy(), empty.copy(), np.empty(0), stats)

    u = (src_idx % src_cam.width).astype(np.float64)
    v = (src_idx // src_cam.width).astype(np.float64)
    d = depth_map.reshape(-1)[src_idx]

    # Unproject, transform, project; inlined to stay allocation-light on the hot path.
    x = (u - src_cam.cx) * d / src_cam.fx
    y = (v - src_cam.cy) * d / src_cam.fy
    pts = np.stack([x, y, d], axis=-1) @ dst_from_src.rotation.T + dst_from_src.translation
    z = pts[:, 2]

    front = z > 0
    stats.dropped_behind_camera = int(src_idx.size - np.count_nonzero(front))
    src_idx, pts, z = src_idx[front], pts[front], z[front]

    tu = round_half_away(dst_cam.fx * pts[:, 0] / z + dst_cam.cx)
    tv = round_half_away(dst_cam.fy * pts[:, 1] / z + dst_cam.cy)
    inside = dst_cam.contains(tu, tv)
    stats.dropped_out_of_bounds = int(z.size - np.count_nonzero(inside))

    src_idx, tu, tv, z = src_idx[inside], tu[inside], tv[inside], z[inside]
    stats.kept = int(src_idx.size)
    return GridWarp(src_idx, tu, tv, z, stats)


def select_min_depth(
    target_flat: np.ndarray,
    depth: np.ndarray,
    tie_key: np.ndarray,
    n_targets: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic z-buffer: per target pixel, pick min depth, then min tie key.

    Returns (winner_candidate_indices, winner_target_flat_indices). tie_key must
    be unique per candidate for the selection to be schedule-independent.
    """
    if target_flat.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    order = np.lexsort((tie_key, depth, target_flat))
    sorted_targets = target_flat[order]
    first = np.ones(order.size, dtype=bool)
    first[1:] = sorted_targets[1:] != sorted_targets[:-1]
    winners = order[first]
    return winners, target_flat[winners]
