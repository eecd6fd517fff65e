"""Ground-truth LDI construction from posed RGB-D + instance sequences.

Every pixel of every supportive frame is forward-warped into the reference
view. A warped sample is a background candidate at its landing pixel when

  1. its depth exceeds the reference (foreground) depth there by eps_occ,
  2. its instance id differs from the reference instance there, and
  3. its instance occludes no other instance anywhere (checked in both warp
     directions: supportive frames into the reference and the reference into
     each supportive frame).

The candidate with the smallest depth wins; ties prefer the lowest frame
index, then the lowest row-major source pixel, so the build is bit-identical
under any processing order. The foreground mask marks reference pixels whose
instance is in the occluder set; only those pixels receive background
candidates, everywhere else the second layer stays invalid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidInputError
from .geometry import CameraIntrinsics, RigidPose, ray_to_depth_map
from .ldi import LayeredDepthImage, RgbdLayer
from .warping import WarpStats, select_min_depth, warp_grid

# Depth tolerance for occlusion and ordering comparisons (meters). The source
# inequalities are strict; re-projection needs slack against rounding, and
# 1 cm sits well below indoor object-separation scales.
DEFAULT_EPS_OCC = 0.01

# Frames per build window, with the middle frame as reference.
DEFAULT_WINDOW = 20


def default_reference_index(n_frames: int) -> int:
    """Middle frame of the window."""
    return n_frames // 2


@dataclass
class RgbdInstanceFrame:
    """One posed input frame.

    range_map holds meters, interpreted as plane depth unless
    range_is_ray_length is set (then it is distance from the camera center
    and gets converted on use). pose is camera-to-world.
    """

    color: np.ndarray
    range_map: np.ndarray
    instances: np.ndarray | None
    pose: RigidPose
    camera: CameraIntrinsics
    range_is_ray_length: bool = False

    def __post_init__(self):
        self.color = np.ascontiguousarray(self.color, dtype=np.uint8)
        self.range_map = np.ascontiguousarray(self.range_map, dtype=np.float64)
        h, w = self.camera.height, self.camera.width
        if self.color.shape != (h, w, 3):
            raise InvalidInputError(f"color shape {self.color.shape} does not match camera {h}x{w}")
        if self.range_map.shape != (h, w):
            raise InvalidInputError(f"range shape {self.range_map.shape} does not match camera {h}x{w}")
        if np.any(self.range_map < 0):
            raise InvalidInputError("range values must be non-negative")
        if self.instances is not None:
            self.instances = np.ascontiguousarray(self.instances, dtype=np.int64)
            if self.instances.shape != (h, w):
                raise InvalidInputError(f"instance shape {self.instances.shape} does not match camera {h}x{w}")
            if np.any(self.instances < 0):
                raise InvalidInputError("instance ids must be non-negative")

    def depth_map(self) -> np.ndarray:
        """Plane-depth image, converting from ray lengths when so tagged."""
        if self.range_is_ray_length:
            return ray_to_depth_map(self.range_map, self.camera)
        return self.range_map


@dataclass
class WarpedSamples:
    """Samples of one frame warped into a target view (struct of arrays)."""

    target_u: np.ndarray
    target_v: np.ndarray
    depth: np.ndarray
    color: np.ndarray
    instance: np.ndarray
    src_index: np.ndarray
    source_frame: int

    def __len__(self) -> int:
        return self.depth.size


def warp_frame(
    src: RgbdInstanceFrame,
    t_ref_src: RigidPose,
    ref_cam: CameraIntrinsics,
    source_frame: int = 0,
) -> tuple[WarpedSamples, WarpStats]:
    """Warp every pixel of src into the reference view.

    Returns one sample per source pixel that lands inside the reference
    bounds with positive depth; dropped pixels are only counted in the stats.
    """
    depth = src.depth_map()
    grid = warp_grid(depth, depth > 0, src.camera, ref_cam, t_ref_src)
    color = src.color.reshape(-1, 3)[grid.src_index]
    if src.instances is not None:
        instance = src.instances.reshape(-1)[grid.src_index]
    else:
        instance = np.zeros(len(grid), dtype=np.int64)
    samples = WarpedSamples(
        target_u=grid.target_u,
        target_v=grid.target_v,
        depth=grid.depth,
        color=color,
        instance=instance,
        src_index=grid.src_index,
        source_frame=source_frame,
    )
    return samples, grid.stats


def occluding_instances(
    samples: WarpedSamples,
    target_depth: np.ndarray,
    target_instances: np.ndarray,
    eps_occ: float,
) -> set[int]:
    """Occluders revealed by one warp: the nearer side of every separated pair.

    A sample landing in front of a different instance occludes it; a sample
    landing behind a different instance is occluded by it, so the target
    instance goes into the set. Id 0 (no instance / scene structure) can be
    occluded but is never reported as an occluder, and self-pairs are excluded
    by the no-self-occlusion assumption.
    """
    t_depth = target_depth[samples.target_v, samples.target_u]
    t_inst = target_instances[samples.target_v, samples.target_u]
    differs = samples.instance != t_inst
    sample_in_front = differs & (samples.depth < t_depth - eps_occ) & (samples.instance != 0)
    target_in_front = differs & (samples.depth > t_depth + eps_occ) & (t_inst != 0)
    occ = set(np.unique(samples.instance[sample_in_front]).tolist())
    occ |= set(np.unique(t_inst[target_in_front]).tolist())
    return occ


def collect_occluders(
    samples_into_ref: list[WarpedSamples],
    ref: RgbdInstanceFrame,
    ref_into_frames: list[tuple[WarpedSamples, RgbdInstanceFrame]],
    eps_occ: float = DEFAULT_EPS_OCC,
) -> frozenset[int]:
    """Union the occluding-instance scan over both warp directions.

    samples_into_ref carry supportive-frame content checked against the
    reference depth; ref_into_frames pairs the reference warped into each
    supportive frame with that frame, catching reference instances that
    occlude something only in a supportive view.
    """
    ref_depth = ref.depth_map()
    occ: set[int] = set()
    for samples in samples_into_ref:
        occ |= occluding_instances(samples, ref_depth, ref.instances, eps_occ)
    for samples, frame in ref_into_frames:
        occ |= occluding_instances(samples, frame.depth_map(), frame.instances, eps_occ)
    return frozenset(occ)


def extract_fg_mask(ref: RgbdInstanceFrame, occluders: frozenset[int] | set[int]) -> np.ndarray:
    """Boolean mask of reference pixels whose instance is an occluder."""
    if ref.instances is None:
        raise ConfigurationError("reference frame has no instance annotations")
    if not occluders:
        return np.zeros(ref.instances.shape, dtype=bool)
    ids = np.fromiter((i for i in occluders if i != 0), dtype=np.int64)
    return np.isin(ref.instances, ids)


def select_background(
    all_samples: list[WarpedSamples],
    fg_depth: np.ndarray,
    ref_instances: np.ndarray,
    fg_mask: np.ndarray,
    occluders: frozenset[int] | set[int],
    eps_occ: float = DEFAULT_EPS_OCC,
) -> tuple[RgbdLayer, np.ndarray, int]:
    """Per-pixel minimum-depth selection among samples passing conditions 1-3.

    Candidates are kept only on fg_mask pixels; the second layer stays
    invalid where the reference already shows background. Returns the
    background layer, an instance map of the winning samples (-1 where
    invalid), and the total candidate count.
    """
    h, w = fg_depth.shape
    occ_ids = np.fromiter(sorted(occluders), dtype=np.int64) if occluders else np.empty(0, np.int64)

    cand_target, cand_depth, cand_tie = [], [], []
    cand_color, cand_instance = [], []
    n_candidates = 0
    for samples in all_samples:
        tu, tv = samples.target_u, samples.target_v
        keep = (
            (samples.depth > fg_depth[tv, tu] + eps_occ)
            & (samples.instance != ref_instances[tv, tu])
            & ~np.isin(samples.instance, occ_ids)
            & fg_mask[tv, tu]
        )
        n_keep = int(np.count_nonzero(keep))
        if n_keep == 0:
            continue
        n_candidates += n_keep
        cand_target.append((tv[keep] * w + tu[keep]).astype(np.int64))
        cand_depth.append(samples.depth[keep])
        cand_tie.append(samples.source_frame * (h * w) + samples.src_index[keep])
        cand_color.append(samples.color[keep])
        cand_instance.append(samples.instance[keep])

    bg_color = np.zeros((h, w, 3), dtype=np.uint8)
    bg_depth = np.zeros((h, w), dtype=np.float64)
    bg_valid = np.zeros((h, w), dtype=bool)
    bg_instances = np.full((h, w), -1, dtype=np.int64)

    if cand_target:
        target = np.concatenate(cand_target)
        depth = np.concatenate(cand_depth)
        tie = np.concatenate(cand_tie)
        color = np.concatenate(cand_color)
        instance = np.concatenate(cand_instance)
        winners, win_targets = select_min_depth(target, depth, tie, h * w)
        rows, cols = win_targets // w, win_targets % w
        bg_color[rows, cols] = color[winners]
        bg_depth[rows, cols] = depth[winners]
        bg_valid[rows, cols] = True
        bg_instances[rows, cols] = instance[winners]

    return RgbdLayer(bg_color, bg_depth, bg_valid), bg_instances, n_candidates


@dataclass
class BuildStats:
    """Everything the build observed, for logging and validity auditing."""

    reference_index: int
    eps_occ: float
    occluders: frozenset[int] = frozenset()
    warp_stats: dict[int, dict] = field(default_factory=dict)
    candidates: int = 0
    bg_filled_pixels: int = 0
    fg_mask_pixels: int = 0
    bg_instances: np.ndarray | None = None

    def as_dict(self) -> dict:
        return {
            "reference_index": self.reference_index,
            "eps_occ": self.eps_occ,
            "occluders": sorted(self.occluders),
            "warp_stats": self.warp_stats,
            "candidates": self.candidates,
            "bg_filled_pixels": self.bg_filled_pixels,
            "fg_mask_pixels": self.fg_mask_pixels,
        }


def build_ldi(
    frames: list[RgbdInstanceFrame],
    ref_index: int | None = None,
    eps_occ: float = DEFAULT_EPS_OCC,
) -> tuple[LayeredDepthImage, BuildStats]:
    """Build a two-layer LDI from posed RGB-D + instance frames.

    frames are a consecutive window; the reference defaults to the middle.
    The reference frame must carry dense positive depth and every frame needs
    instance annotations (noisy or missing annotations break the method, so
    they are rejected up front instead of being treated as id 0).
    """
    if len(frames) < 2:
        raise ConfigurationError(f"need at least 2 frames, got {len(frames)}")
    if ref_index is None:
        ref_index = default_reference_index(len(frames))
    if not 0 <= ref_index < len(frames):
        raise ConfigurationError(f"reference index {ref_index} outside 0..{len(frames) - 1}")
    shape = frames[ref_index].range_map.shape
    for i, f in enumerate(frames):
        if f.instances is None:
            raise ConfigurationError(f"frame {i} has no instance annotations")
        if f.range_map.shape != shape:
            raise ConfigurationError(
                f"frame {i} dimensions {f.range_map.shape} differ from reference {shape}"
            )

    ref = frames[ref_index]
    ref_depth = ref.depth_map()
    if np.any(ref_depth <= 0) or not np.all(np.isfinite(ref_depth)):
        raise ConfigurationError("reference frame depth must be dense and positive (first layer)")

    world_from_ref = ref.pose
    ref_from_world = world_from_ref.inverse()

    stats = BuildStats(reference_index=ref_index, eps_occ=eps_occ)
    samples_into_ref: list[WarpedSamples] = []
    ref_into_frames: list[tuple[WarpedSamples, RgbdInstanceFrame]] = []
    for i, frame in enumerate(frames):
        if i == ref_index:
            continue
        ref_from_frame = ref_from_world.compose(frame.pose)
        samples, wstats = warp_frame(frame, ref_from_frame, ref.camera, source_frame=i)
        samples_into_ref.append(samples)
        stats.warp_stats[i] = wstats.as_dict()
        back, _ = warp_frame(ref, ref_from_frame.inverse(), frame.camera, source_frame=ref_index)
        ref_into_frames.append((back, frame))

    occluders = collect_occluders(samples_into_ref, ref, ref_into_frames, eps_occ)
    fg_mask = extract_fg_mask(ref, occluders)
    background, bg_instances, n_candidates = select_background(
        samples_into_ref, ref_depth, ref.instances, fg_mask, occluders, eps_occ
    )

    foreground = RgbdLayer(ref.color, ref_depth, np.ones(shape, dtype=bool))
    ldi = LayeredDepthImage(
        foreground=foreground,
        background=background,
        fg_mask=fg_mask,
        camera=ref.camera,
        ref_pose=ref.pose,
    )
    stats.occluders = occluders
    stats.candidates = n_candidates
    stats.bg_filled_pixels = int(np.count_nonzero(background.valid))
    stats.fg_mask_pixels = int(np.count_nonzero(fg_mask))
    stats.bg_instances = bg_instances
    return ldi, stats
