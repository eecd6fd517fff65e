"""Command-line pipeline: build, diminish, render, eval, serve.

Exit codes: 0 success, 1 processing error, 2 configuration error. Every
command is a pure function of its inputs; identical invocations write
byte-identical outputs. LDIKIT_DATA_ROOT (when set) anchors relative data
paths and LDIKIT_PORT overrides the serve port.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import builder, masking, metrics, render, sequence, service
from .errors import ConfigurationError, LdikitError
from .inpaint import DEFAULT_MAX_ITERS, DEFAULT_TOL, InpaintRequest, get_backend, inpaint
from .ldi import LayeredDepthImage, RgbdLayer, load_ldi, save_ldi

# Default view-synthesis sweep: both signs of dx and dy at two magnitudes.
SWEEP_MAGNITUDES = (0.05, 0.10)


def _data_path(raw: str) -> Path:
    path = Path(raw)
    root = os.environ.get("LDIKIT_DATA_ROOT")
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _load_ldi_checked(raw: str) -> LayeredDepthImage:
    path = _data_path(raw)
    if not path.is_file():
        raise ConfigurationError(f"no such LDI container: {path}")
    return load_ldi(path)


def cmd_build(args) -> int:
    seq_dir = _data_path(args.sequence)
    if not seq_dir.is_dir():
        raise ConfigurationError(f"no such sequence directory: {seq_dir}")
    frames = sequence.load_sequence(
        seq_dir, range_unit=args.range_unit, pose_convention=args.pose_convention
    )
    if args.window is not None and len(frames) > args.window:
        frames = frames[args.start : args.start + args.window]
        if len(frames) < 2:
            raise ConfigurationError(f"window [{args.start}, {args.start + args.window}) selects too few frames")
    ldi, stats = builder.build_ldi(frames, ref_index=args.ref_index, eps_occ=args.eps_occ)
    save_ldi(ldi, args.out)
    if args.fg_mask_out:
        sequence.save_mask_png(args.fg_mask_out, ldi.fg_mask)
    if args.stats_out:
        Path(args.stats_out).write_text(json.dumps(stats.as_dict(), indent=2) + "\n")
    print(
        f"built {args.out}: occluders={sorted(stats.occluders)} "
        f"mask={stats.fg_mask_pixels}px background={stats.bg_filled_pixels}px"
    )
    return 0


def _diminish_mask(args, ldi: LayeredDepthImage) -> np.ndarray:
    if args.scores:
        scores = sequence.load_score_map(_data_path(args.scores), invert=args.invert_scores)
        if scores.shape != ldi.shape:
            raise ConfigurationError(
                f"score map {scores.shape} does not match LDI {ldi.shape}"
            )
        mask = masking.threshold_scores(scores, args.threshold)
    else:
        mask = ldi.fg_mask  # ground-truth foreground separation
    return masking.dilate_cross(mask, args.dilate_size)


def cmd_diminish(args) -> int:
    ldi = _load_ldi_checked(args.ldi)
    mask = _diminish_mask(args, ldi)
    color_n = masking.normalize_color(ldi.foreground.color)
    depth_n = masking.normalize_depth(ldi.foreground.depth, args.max_depth)
    request = InpaintRequest.from_planes(color_n, depth_n, mask, sentinel=args.sentinel)
    backend = get_backend(args.backend, tol=args.tol, max_iters=args.max_iters)
    result = inpaint(request, backend)

    bg_color = masking.denormalize_color(result.color)
    bg_depth = masking.denormalize_depth(result.depth, args.max_depth)
    completed = LayeredDepthImage(
        foreground=ldi.foreground,
        background=RgbdLayer(bg_color, bg_depth, np.ones(ldi.shape, bool)),
        fg_mask=mask,
        camera=ldi.camera,
        ref_pose=ldi.ref_pose,
    )
    save_ldi(completed, args.out)
    if args.mask_out:
        sequence.save_mask_png(args.mask_out, mask)
    if args.bg_color_out:
        sequence.save_color_png(args.bg_color_out, bg_color)
    if args.bg_depth_out:
        sequence.save_gray16_png(args.bg_depth_out, np.round(bg_depth * 1000.0))
    note = "" if result.converged else " (backend did not converge)"
    print(f"diminished {args.ldi} -> {args.out}: {int(mask.sum())} px inpainted{note}")
    return 0


def _write_view(view: render.RenderedView, out: Path, emit_void: bool) -> None:
    sequence.save_color_png(out, view.color)
    if emit_void:
        sequence.save_mask_png(out.with_name(out.stem + "_void.png"), view.void)


def cmd_render(args) -> int:
    ldi = _load_ldi_checked(args.ldi)
    explicit = any(v is not None for v in (args.dx, args.dy, args.dz))
    if explicit:
        pert = render.ViewPerturbation(args.dx or 0.0, args.dy or 0.0, args.dz or 0.0)
        view = (
            render.render_single_layer(ldi, pert)
            if args.single_layer
            else render.render_ldi(ldi, pert)
        )
        out = Path(args.out or "view.png")
        _write_view(view, out, args.emit_void)
        print(f"rendered {out}: void={view.void_count}px")
        return 0

    # default sweep: top, bottom, left, right at two magnitudes
    out_dir = Path(args.out_dir or "renders")
    out_dir.mkdir(parents=True, exist_ok=True)
    voids = []
    for mag in args.magnitudes:
        for axis, sign in (("dx", 1), ("dx", -1), ("dy", 1), ("dy", -1)):
            pert = render.ViewPerturbation(**{axis: sign * mag})
            name = f"{axis}{'+' if sign > 0 else '-'}{mag:g}"
            ldi_view = render.render_ldi(ldi, pert)
            _write_view(ldi_view, out_dir / f"{name}_ldi.png", args.emit_void)
            row = {"perturbation": name, "void_ldi": ldi_view.void_count}
            if args.single_layer:
                single = render.render_single_layer(ldi, pert)
                _write_view(single, out_dir / f"{name}_single.png", args.emit_void)
                row["void_single"] = single.void_count
            voids.append(row)
    (out_dir / "voids.json").write_text(json.dumps(voids, indent=2) + "\n")
    print(f"rendered {len(voids) * (2 if args.single_layer else 1)} views into {out_dir}")
    return 0


def cmd_eval(args) -> int:
    pred = _load_ldi_checked(args.pred)
    gt = _load_ldi_checked(args.gt)
    whole, inpainted = metrics.evaluate_ldi(pred, gt, restrict_to_gt_mask=args.restrict_gt_mask)
    report = {"whole": whole.as_dict(), "inpainted": inpainted.as_dict()}
    Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    summary = ", ".join(
        f"{k}={v:.4f}" for k, v in (("rel", whole.rel), ("rms", whole.rms_depth)) if v is not None
    )
    print(f"eval {args.pred} vs {args.gt}: {summary or 'undefined'} -> {args.report}")
    return 0


def resolve_port(explicit: int | None) -> int:
    """--port wins, then LDIKIT_PORT, then the service default."""
    if explicit is not None:
        return explicit
    raw = os.environ.get("LDIKIT_PORT")
    if raw is None:
        return service.DEFAULT_PORT
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"LDIKIT_PORT must be an integer, got {raw!r}") from None


def cmd_serve(args) -> int:
    ldi = _load_ldi_checked(args.ldi)
    service.run_server(ldi, port=resolve_port(args.port), host=args.host)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldikit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a ground-truth LDI from a posed RGB-D sequence")
    p.add_argument("sequence", help="sequence directory (camera.txt, poses.txt, color/, range/, instance/)")
    p.add_argument("--out", required=True, help="output .ldi container")
    p.add_argument("--window", type=int, default=builder.DEFAULT_WINDOW,
                   help="frames per build window (default %(default)s)")
    p.add_argument("--start", type=int, default=0, help="first frame of the window")
    p.add_argument("--ref-index", type=int, default=None,
                   help="reference frame inside the window (default: middle)")
    p.add_argument("--eps-occ", type=float, default=builder.DEFAULT_EPS_OCC,
                   help="occlusion depth tolerance in meters (default %(default)s)")
    p.add_argument("--range-unit", choices=sequence.RANGE_UNITS, default=None,
                   help="override the range interpretation from camera.txt")
    p.add_argument("--pose-convention", choices=sequence.POSE_CONVENTIONS, default="camera_to_world")
    p.add_argument("--fg-mask-out", default=None, help="optionally write the foreground mask PNG")
    p.add_argument("--stats-out", default=None, help="optionally write build statistics JSON")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("diminish", help="remove foreground and inpaint the background")
    p.add_argument("--ldi", required=True, help="input .ldi container")
    p.add_argument("--out", required=True, help="output .ldi with completed background")
    p.add_argument("--scores", default=None,
                   help="segmentation score image; omit to use the container's ground-truth mask")
    p.add_argument("--invert-scores", action="store_true",
                   help="flip score polarity so 1 means foreground")
    p.add_argument("--threshold", type=float, default=masking.DEFAULT_THRESHOLD,
                   help="foreground decision threshold (default %(default)s)")
    p.add_argument("--dilate-size", type=int, default=masking.DEFAULT_DILATE_SIZE,
                   help="cross dilation extent in pixels (default %(default)s)")
    p.add_argument("--sentinel", type=float, default=masking.SENTINEL,
                   help="hole marker value in normalized space (default %(default)s)")
    p.add_argument("--max-depth", type=float, default=masking.DEFAULT_MAX_DEPTH_M,
                   help="depth normalization range in meters (default %(default)s)")
    p.add_argument("--backend", default="diffusion", help="inpainting backend name")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    p.add_argument("--mask-out", default=None)
    p.add_argument("--bg-color-out", default=None)
    p.add_argument("--bg-depth-out", default=None)
    p.set_defaults(func=cmd_diminish)

    p = sub.add_parser("render", help="synthesize perturbed views from an LDI")
    p.add_argument("--ldi", required=True)
    p.add_argument("--dx", type=float, default=None)
    p.add_argument("--dy", type=float, default=None)
    p.add_argument("--dz", type=float, default=None)
    p.add_argument("--single-layer", action="store_true",
                   help="render the single-layer baseline (sweep mode: render both)")
    p.add_argument("--out", default=None, help="output PNG for an explicit perturbation")
    p.add_argument("--out-dir", default=None, help="output directory for the default sweep")
    p.add_argument("--magnitudes", type=float, nargs="+", default=list(SWEEP_MAGNITUDES),
                   help="sweep magnitudes in meters (default %(default)s)")
    p.add_argument("--emit-void", action="store_true", help="also write void masks")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("eval", help="compare a predicted LDI against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--report", required=True, help="output JSON report")
    p.add_argument("--restrict-gt-mask", action="store_true",
                   help="restrict the inpainted area to the ground-truth mask as well")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="serve interactive renders over HTTP")
    p.add_argument("--ldi", required=True)
    p.add_argument("--port", type=int, default=None, help="default: $LDIKIT_PORT or 8754")
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except LdikitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
