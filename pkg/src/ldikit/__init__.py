"""Two-layer layered depth images: build, diminish, render, evaluate."""

from .builder import (
    DEFAULT_EPS_OCC,
    DEFAULT_WINDOW,
    BuildStats,
    RgbdInstanceFrame,
    build_ldi,
    collect_occluders,
    default_reference_index,
    extract_fg_mask,
    warp_frame,
)
from .errors import (
    BehindCameraError,
    ConfigurationError,
    InvalidDepthError,
    InvalidInputError,
    LdiFormatError,
    LdikitError,
    LdiVersionError,
    UndefinedMetricError,
    UnfillableError,
)
from .geometry import (
    CameraIntrinsics,
    RigidPose,
    project,
    ray_to_depth,
    ray_to_depth_map,
    transform_point,
    unproject,
    unproject_map,
)
from .inpaint import (
    DiffusionBackend,
    InpaintRequest,
    InpaintResult,
    diffusion_fill,
    get_backend,
    inpaint,
    pair_consistency_score,
)
from .ldi import (
    LayeredDepthImage,
    RgbdLayer,
    depth_ordering_violations,
    load_ldi,
    save_ldi,
)
from .masking import (
    DEFAULT_DILATE_SIZE,
    DEFAULT_THRESHOLD,
    SENTINEL,
    apply_mask,
    dilate_cross,
    threshold_scores,
)
from .metrics import (
    MetricReport,
    berhu,
    evaluate_areas,
    evaluate_ldi,
    iou,
    mae,
    masked_l2,
    rel_error,
    rms_error,
    ssim,
)
from .render import (
    RenderedView,
    ViewPerturbation,
    morphological_close,
    render_ldi,
    render_single_layer,
    warp_layer,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
