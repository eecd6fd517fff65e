"""Novel-view synthesis from a two-layer LDI.

The foreground layer is forward-splatted into the perturbed view with a
minimum-depth z-buffer; a small morphological closing fills the one-pixel
cracks that forward splatting leaves; pixels that are still void are then
substituted from the warped background layer. Border regions no layer can
reach stay void (black, zero depth). The single-layer baseline skips the
background substitution, so its void set always contains the LDI one.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError
from .geometry import RigidPose, CameraIntrinsics
from .ldi import LayeredDepthImage, RgbdLayer
from .warping import select_min_depth, warp_grid

DEFAULT_CLOSE_KERNEL = 3

# Beyond this translation magnitude the small-viewpoint-change assumption is shaky.
PERTURBATION_WARN_M = 0.5

VOID_COLOR = np.zeros(3, dtype=np.uint8)


@dataclass
class ViewPerturbation:
    """Offset of the virtual camera relative to the reference, in meters."""

    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0
    rotation: np.ndarray | None = None

    def __post_init__(self):
        t = (self.dx, self.dy, self.dz)
        if not all(np.isfinite(t)):
            raise InvalidInputError(f"perturbation must be finite, got {t}")
        if float(np.linalg.norm(t)) > PERTURBATION_WARN_M:
            warnings.warn(
                f"perturbation magnitude {np.linalg.norm(t):.3f} m exceeds "
                f"{PERTURBATION_WARN_M} m; expect large voids",
                stacklevel=2,
            )

    def ref_to_target(self) -> RigidPose:
        """Transform taking reference-camera coordinates to target-camera coordinates."""
        cam_to_ref = RigidPose(
            self.rotation if self.rotation is not None else np.eye(3),
            np.array([self.dx, self.dy, self.dz]),
        )
        return cam_to_ref.inverse()


@dataclass
class RenderedView:
    """Splat result: color, depth, and the pixels nothing reached."""

    color: np.ndarray
    depth: np.ndarray
    void: np.ndarray

    def __post_init__(self):
        self.void = np.asarray(self.void, dtype=bool)

    @property
    def void_count(self) -> int:
        return int(np.count_nonzero(self.void))


def warp_layer(
    layer: RgbdLayer, cam: CameraIntrinsics, pert: ViewPerturbation
) -> RenderedView:
    """Forward-splat the valid pixels of one layer into the perturbed view.

    Collisions keep the smaller depth; exact ties keep the smaller row-major
    source index, making the result schedule-independent.
    """
    grid = warp_grid(layer.depth, layer.valid, cam, cam, pert.ref_to_target())
    h, w = layer.shape
    color = np.zeros((h, w, 3), dtype=np.uint8)
    depth = np.zeros((h, w), dtype=np.float64)
    void = np.ones((h, w), dtype=bool)
    if len(grid):
        target = grid.target_v * w + grid.target_u
        winners, win_targets = select_min_depth(target, grid.depth, grid.src_index, h * w)
        rows, cols = win_targets // w, win_targets % w
        color[rows, cols] = layer.color.reshape(-1, 3)[grid.src_index[winners]]
        depth[rows, cols] = grid.depth[winners]
        void[rows, cols] = False
    return RenderedView(color, depth, void)


def _shifted(arr: np.ndarray, dv: int, du: int, fill) -> np.ndarray:
    """out[v, u] = arr[v + dv, u + du], with `fill` outside the image."""
    out = np.full_like(arr, fill)
    h, w = arr.shape[:2]
    dst_v = slice(max(0, -dv), h - max(0, dv))
    src_v = slice(max(0, dv), h - max(0, -dv))
    dst_u = slice(max(0, -du), w - max(0, du))
    src_u = slice(max(0, du), w - max(0, -du))
    out[dst_v, dst_u] = arr[src_v, src_u]
    return out


def morphological_close(view: RenderedView, kernel_size: int = DEFAULT_CLOSE_KERNEL) -> RenderedView:
    """Fill splatting cracks by closing the valid-pixel set.

    The valid mask is dilated then eroded with a kernel_size square; pixels
    gained by the closing take color and depth from their nearest originally
    valid neighbor inside the kernel window (ties resolved in fixed offset
    order). Voids larger than the kernel survive.
    """
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise InvalidInputError(f"close kernel must be odd and >= 1, got {kernel_size}")
    valid = ~view.void
    if kernel_size == 1 or not np.any(view.void) or not np.any(valid):
        return RenderedView(view.color.copy(), view.depth.copy(), view.void.copy())

    square = np.ones((kernel_size, kernel_size), dtype=bool)
    dilated = ndimage.binary_dilation(valid, structure=square)
    closed = ndimage.binary_erosion(dilated, structure=square, border_value=1)

    color = view.color.copy()
    depth = view.depth.copy()
    remaining = closed & ~valid
    r = kernel_size // 2
    offsets = sorted(
        ((dv, du) for dv in range(-r, r + 1) for du in range(-r, r + 1) if (dv, du) != (0, 0)),
        key=lambda o: (o[0] * o[0] + o[1] * o[1], o[0], o[1]),
    )
    for dv, du in offsets:
        if not np.any(remaining):
            break
        donor = _shifted(valid, dv, du, False)
        take = remaining & donor
        if not np.any(take):
            continue
        color[take] = _shifted(view.color, dv, du, 0)[take]
        depth[take] = _shifted(view.depth, dv, du, 0.0)[take]
        remaining &= ~take
    return RenderedView(color, depth, ~closed)


def render_single_layer(
    ldi: LayeredDepthImage,
    pert: ViewPerturbation,
    close_kernel: int = DEFAULT_CLOSE_KERNEL,
) -> RenderedView:
    """Baseline: warp only the first layer and close small holes."""
    return morphological_close(warp_layer(ldi.foreground, ldi.camera, pert), close_kernel)


def render_ldi(
    ldi: LayeredDepthImage,
    pert: ViewPerturbation,
    close_kernel: int = DEFAULT_CLOSE_KERNEL,
) -> RenderedView:
    """Warp the foreground, close small holes, then fill what is still void
    from the warped background layer."""
    fg = render_single_layer(ldi, pert, close_kernel)
    bg = warp_layer(ldi.background, ldi.camera, pert)
    fill = fg.void & ~bg.void
    color = fg.color.copy()
    depth = fg.depth.copy()
    color[fill] = bg.color[fill]
    depth[fill] = bg.depth[fill]
    return RenderedView(color, depth, fg.void & bg.void)
