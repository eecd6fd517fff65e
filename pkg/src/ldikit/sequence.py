"""Posed RGB-D + instance sequence ingestion.

Directory layout:

    sequence/
      camera.txt        shared intrinsics (key: value), optional range_unit
      poses.txt         per frame: <frame_id> <16 row-major floats>
      color/<id>.png    8-bit RGB
      range/<id>.png    16-bit grayscale, millimeters (depth or ray length)
      instance/<id>.png 16-bit grayscale instance ids (optional directory)

Poses are camera-to-world by default; datasets that store world-to-camera
load with pose_convention="world_to_camera" and get inverted on the way in.
Range images hold plane depth unless camera.txt says range_unit: ray (or the
loader is told so), in which case they are ray lengths from the camera
center.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .builder import RgbdInstanceFrame
from .errors import ConfigurationError
from .geometry import RigidPose, format_camera_text, parse_camera_text

RANGE_UNITS = ("depth", "ray")
POSE_CONVENTIONS = ("camera_to_world", "world_to_camera")


def save_color_png(path, color: np.ndarray) -> None:
    Image.fromarray(np.ascontiguousarray(color, dtype=np.uint8), mode="RGB").save(path)


def load_color_png(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def save_gray16_png(path, values: np.ndarray) -> None:
    values = np.ascontiguousarray(values)
    if values.dtype != np.uint16:
        if np.any(values < 0) or np.any(values > 65535):
            raise ConfigurationError(f"{path}: values outside uint16 range")
        values = values.astype(np.uint16)
    Image.fromarray(values).save(path)  # uint16 maps to 16-bit grayscale PNG


def load_gray16_png(path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img)
    if arr.ndim != 2:
        raise ConfigurationError(f"{path}: expected single-channel image, got shape {arr.shape}")
    if arr.dtype not in (np.uint8, np.uint16, np.int32):
        raise ConfigurationError(f"{path}: unsupported bit depth {arr.dtype}")
    if np.any(arr < 0) or np.any(arr > 65535):
        raise ConfigurationError(f"{path}: values outside uint16 range")
    return arr.astype(np.uint16)


def save_mask_png(path, mask: np.ndarray) -> None:
    Image.fromarray(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8), mode="L").save(path)


def load_score_map(path, invert: bool = False) -> np.ndarray:
    """Read a segmentation score image to [0, 1] (8- or 16-bit grayscale).

    Networks disagree on polarity; invert flips the map so 1 means foreground.
    """
    with Image.open(path) as img:
        arr = np.asarray(img)
    if arr.ndim != 2:
        raise ConfigurationError(f"{path}: score map must be single-channel, got {arr.shape}")
    full_scale = 255.0 if arr.dtype == np.uint8 else 65535.0
    scores = arr.astype(np.float64) / full_scale
    return 1.0 - scores if invert else scores


def _read_poses(path: Path) -> dict[str, RigidPose]:
    if not path.is_file():
        raise ConfigurationError(f"missing pose file {path}")
    poses: dict[str, RigidPose] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 17:
            raise ConfigurationError(f"{path}:{lineno}: expected '<id> <16 floats>', got {len(parts)} fields")
        try:
            matrix = np.array([float(x) for x in parts[1:]]).reshape(4, 4)
        except ValueError as exc:
            raise ConfigurationError(f"{path}:{lineno}: malformed float: {exc}") from exc
        poses[parts[0]] = RigidPose.from_matrix(matrix)
    return poses


def load_sequence(
    directory,
    range_unit: str | None = None,
    pose_convention: str = "camera_to_world",
    require_instances: bool = True,
) -> list[RgbdInstanceFrame]:
    """Load all frames of a sequence directory, sorted by frame id."""
    directory = Path(directory)
    if pose_convention not in POSE_CONVENTIONS:
        raise ConfigurationError(f"pose_convention must be one of {POSE_CONVENTIONS}")
    camera_file = directory / "camera.txt"
    if not camera_file.is_file():
        raise ConfigurationError(f"missing camera file {camera_file}")
    camera, _, extras = parse_camera_text(camera_file.read_text())

    if range_unit is None:
        range_unit = extras.get("range_unit", "depth")
    if range_unit not in RANGE_UNITS:
        raise ConfigurationError(f"range_unit must be one of {RANGE_UNITS}, got {range_unit!r}")

    poses = _read_poses(directory / "poses.txt")
    color_dir = directory / "color"
    if not color_dir.is_dir():
        raise ConfigurationError(f"missing color directory {color_dir}")
    frame_ids = sorted(p.stem for p in color_dir.glob("*.png"))
    if not frame_ids:
        raise ConfigurationError(f"no color frames found under {color_dir}")

    instance_dir = directory / "instance"
    if require_instances and not instance_dir.is_dir():
        raise ConfigurationError(
            f"missing instance directory {instance_dir}; instance annotations are required to build"
        )

    frames = []
    for fid in frame_ids:
        if fid not in poses:
            raise ConfigurationError(f"poses.txt has no entry for frame {fid}")
        pose = poses[fid]
        if pose_convention == "world_to_camera":
            pose = pose.inverse()
        range_path = directory / "range" / f"{fid}.png"
        if not range_path.is_file():
            raise ConfigurationError(f"missing range image {range_path}")
        instances = None
        inst_path = instance_dir / f"{fid}.png"
        if instance_dir.is_dir() and inst_path.is_file():
            instances = load_gray16_png(inst_path).astype(np.int64)
        elif require_instances:
            raise ConfigurationError(f"missing instance image {inst_path}")
        frames.append(
            RgbdInstanceFrame(
                color=load_color_png(directory / "color" / f"{fid}.png"),
                range_map=load_gray16_png(range_path).astype(np.float64) / 1000.0,
                instances=instances,
                pose=pose,
                camera=camera,
                range_is_ray_length=(range_unit == "ray"),
            )
        )
    return frames


def save_sequence(directory, frames: list[RgbdInstanceFrame]) -> None:
    """Write frames in the layout load_sequence reads (ranges quantized to mm)."""
    if not frames:
        raise ConfigurationError("cannot save an empty sequence")
    directory = Path(directory)
    for sub in ("color", "range", "instance"):
        (directory / sub).mkdir(parents=True, exist_ok=True)
    camera = frames[0].camera
    unit = "ray" if frames[0].range_is_ray_length else "depth"
    text = format_camera_text(camera) + f"range_unit: {unit}\n"
    (directory / "camera.txt").write_text(text)
    pose_lines = []
    for i, frame in enumerate(frames):
        fid = f"{i:06d}"
        save_color_png(directory / "color" / f"{fid}.png", frame.color)
        save_gray16_png(directory / "range" / f"{fid}.png", np.round(frame.range_map * 1000.0))
        if frame.instances is not None:
            save_gray16_png(directory / "instance" / f"{fid}.png", frame.instances)
        flat = " ".join(repr(float(x)) for x in frame.pose.matrix.reshape(-1))
        pose_lines.append(f"{fid} {flat}")
    (directory / "poses.txt").write_text("\n".join(pose_lines) + "\n")
