"""Evaluation measures: rel, rms, SSIM, IoU, MAE, reverse Huber, masked L2.

Depth errors are reported in meters, RGB rms on the 0-255 scale, MAE on
[0, 1] intensities. Reports are computed for two areas: "whole" covers every
pixel with valid background ground truth, "inpainted" restricts to the
foreground-mask region the completion stage actually produced. Ground truth
background is not guaranteed everywhere, so all area metrics skip invalid
ground-truth pixels.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from skimage.metrics import structural_similarity

from .errors import InvalidInputError, UndefinedMetricError
from .ldi import LayeredDepthImage

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _masked(pred, gt, region):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise InvalidInputError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    if region is None:
        return pred.reshape(-1), gt.reshape(-1)
    region = np.asarray(region, dtype=bool)
    if region.shape != gt.shape[: region.ndim]:
        raise InvalidInputError(f"region shape {region.shape} does not match maps {gt.shape}")
    if not np.any(region):
        raise UndefinedMetricError("metric region is empty")
    return pred[region].reshape(-1), gt[region].reshape(-1)


def rel_error(pred: np.ndarray, gt: np.ndarray, region=None) -> float:
    """Mean relative depth error |pred - gt| / gt over the region."""
    p, g = _masked(pred, gt, region)
    if np.any(g <= 0):
        raise InvalidInputError("rel requires positive ground-truth depth on the region")
    return float(np.mean(np.abs(p - g) / g))


def rms_error(pred: np.ndarray, gt: np.ndarray, region=None) -> float:
    """Root mean square difference over the region."""
    p, g = _masked(pred, gt, region)
    return float(np.sqrt(np.mean((p - g) ** 2)))


def mae(a: np.ndarray, b: np.ndarray, region=None) -> float:
    """Mean absolute difference; callers pass [0, 1] intensities by convention."""
    x, y = _masked(a, b, region)
    return float(np.mean(np.abs(x - y)))


def ssim(a: np.ndarray, b: np.ndarray, data_range: float = 255.0) -> float:
    """Mean structural similarity, Gaussian window 11 / sigma 1.5, K1=0.01, K2=0.03.

    Tri-channel images are scored per channel and averaged.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidInputError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim not in (2, 3) or (a.ndim == 3 and a.shape[2] != 3):
        raise InvalidInputError(f"expected HxW or HxWx3 images, got {a.shape}")
    if min(a.shape[0], a.shape[1]) < SSIM_WINDOW:
        raise InvalidInputError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for the SSIM window"
        )

    def one(x, y):
        return structural_similarity(
            x,
            y,
            win_size=SSIM_WINDOW,
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            use_sample_covariance=False,
            K1=SSIM_K1,
            K2=SSIM_K2,
            data_range=data_range,
        )

    if a.ndim == 2:
        return float(one(a, b))
    return float(np.mean([one(a[..., c], b[..., c]) for c in range(3)]))


def iou(pred: np.ndarray, gt: np.ndarray, positive: bool = True) -> float:
    """Intersection over union of two boolean masks.

    positive=False scores the complement class. Two empty masks count as a
    perfect match (IoU 1).
    """
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise InvalidInputError(f"mask shape mismatch: {pred.shape} vs {gt.shape}")
    if not positive:
        pred, gt = ~pred, ~gt
    union = np.count_nonzero(pred | gt)
    if union == 0:
        return 1.0
    return np.count_nonzero(pred & gt) / union


def berhu(pred: np.ndarray, gt: np.ndarray, region=None, c: float | None = None) -> float:
    """Reverse Huber: |e| up to the threshold c, (e^2 + c^2) / (2c) beyond.

    c defaults to 20% of the maximum absolute residual over the region. The
    two branches agree at |e| = c, so the loss is continuous there.
    """
    p, g = _masked(pred, gt, region)
    e = np.abs(p - g)
    if c is None:
        c = 0.2 * float(e.max())
    if c <= 0:
        return float(np.mean(e))
    return float(np.mean(np.where(e <= c, e, (e * e + c * c) / (2.0 * c))))


def masked_l2(scores: np.ndarray, gt_mask: np.ndarray) -> float:
    """Mean squared difference between [0, 1] scores and a binary target mask."""
    scores = np.asarray(scores, dtype=np.float64)
    target = np.asarray(gt_mask, dtype=bool).astype(np.float64)
    if scores.shape != target.shape:
        raise InvalidInputError(f"shape mismatch: {scores.shape} vs {target.shape}")
    return float(np.mean((scores - target) ** 2))


@dataclass
class MetricReport:
    """Scores for one image area; None marks measures undefined there."""

    area: str
    pixel_count: int
    rel: float | None = None
    rms_depth: float | None = None
    rms_rgb: float | None = None
    ssim: float | None = None
    mae: float | None = None
    iou_fg: float | None = None
    iou_bg: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _area_report(
    name: str,
    region: np.ndarray,
    pred_color,
    pred_depth,
    gt_color,
    gt_depth,
    full_ssim: float | None,
    iou_fg: float | None,
    iou_bg: float | None,
) -> MetricReport:
    count = int(np.count_nonzero(region))
    report = MetricReport(area=name, pixel_count=count, iou_fg=iou_fg, iou_bg=iou_bg)
    if count == 0:
        return report
    report.rel = rel_error(pred_depth, gt_depth, region)
    report.rms_depth = rms_error(pred_depth, gt_depth, region)
    report.rms_rgb = rms_error(pred_color.astype(np.float64), gt_color.astype(np.float64), region)
    report.mae = mae(pred_color.astype(np.float64) / 255.0, gt_color.astype(np.float64) / 255.0, region)
    report.ssim = full_ssim
    return report


def evaluate_areas(
    pred_color: np.ndarray,
    pred_depth: np.ndarray,
    gt_color: np.ndarray,
    gt_depth: np.ndarray,
    inpaint_region: np.ndarray,
    gt_valid: np.ndarray,
    iou_fg: float | None = None,
    iou_bg: float | None = None,
) -> tuple[MetricReport, MetricReport]:
    """Score predicted background planes against ground truth in two areas.

    "whole" covers gt_valid; "inpainted" covers inpaint_region AND gt_valid.
    SSIM is windowed and therefore only reported for the whole image; an
    empty inpainted area yields a report with pixel_count 0 and None scores
    rather than an error.
    """
    gt_valid = np.asarray(gt_valid, dtype=bool)
    inpaint_region = np.asarray(inpaint_region, dtype=bool)
    full_ssim = ssim(pred_color, gt_color, data_range=255.0) if min(gt_valid.shape) >= SSIM_WINDOW else None
    whole = _area_report(
        "whole", gt_valid, pred_color, pred_depth, gt_color, gt_depth, full_ssim, iou_fg, iou_bg
    )
    inpainted = _area_report(
        "inpainted",
        inpaint_region & gt_valid,
        pred_color,
        pred_depth,
        gt_color,
        gt_depth,
        None,
        iou_fg,
        iou_bg,
    )
    return whole, inpainted


def evaluate_ldi(
    pred: LayeredDepthImage,
    gt: LayeredDepthImage,
    restrict_to_gt_mask: bool = False,
) -> tuple[MetricReport, MetricReport]:
    """Compare two LDI backgrounds; the inpainted area follows the predicted
    mask (optionally intersected with the ground-truth mask)."""
    if pred.shape != gt.shape:
        raise InvalidInputError(f"LDI shapes differ: {pred.shape} vs {gt.shape}")
    region = pred.fg_mask & gt.fg_mask if restrict_to_gt_mask else pred.fg_mask
    return evaluate_areas(
        pred.background.color,
        pred.background.depth,
        gt.background.color,
        gt.background.depth,
        inpaint_region=region,
        gt_valid=gt.background.valid,
        iou_fg=iou(pred.fg_mask, gt.fg_mask),
        iou_bg=iou(pred.fg_mask, gt.fg_mask, positive=False),
    )
