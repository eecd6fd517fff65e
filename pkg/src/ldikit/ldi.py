"""Two-layer LDI data model and the .ldi container format.

Container layout (version 1, little-endian, documented in docs/ldi-format.md):

    magic     4 bytes  b"LDIC"
    version   uint16
    height    uint32
    width     uint32
    camera    uint32 byte length + UTF-8 key/value text (intrinsics + ref pose)
    fg color  H*W*3 uint8
    fg depth  H*W uint16, millimeters (0 = invalid)
    bg color  H*W*3 uint8
    bg depth  H*W uint16, millimeters (0 = invalid)
    bg valid  H*W uint8, 0 or 1
    fg mask   H*W uint8, 0 or 1

Depth is quantized to millimeters, bounding the round-trip error at 0.5 mm.
Color, masks, and the valid plane round-trip exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InvalidInputError, LdiFormatError, LdiVersionError
from .geometry import CameraIntrinsics, RigidPose, format_camera_text, parse_camera_text

MAGIC = b"LDIC"
FORMAT_VERSION = 1

# Largest depth representable in 16-bit millimeters.
MAX_DEPTH_M = 65.535


@dataclass
class RgbdLayer:
    """One LDI layer: 8-bit color, metric depth, and a validity mask.

    depth > 0 wherever valid; depth is stored as 0 where invalid.
    """

    color: np.ndarray
    depth: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.color = np.ascontiguousarray(self.color, dtype=np.uint8)
        self.depth = np.ascontiguousarray(self.depth, dtype=np.float64)
        self.valid = np.ascontiguousarray(self.valid, dtype=bool)
        h, w = self.depth.shape
        if self.color.shape != (h, w, 3):
            raise InvalidInputError(f"color shape {self.color.shape} does not match depth {self.depth.shape}")
        if self.valid.shape != (h, w):
            raise InvalidInputError(f"valid shape {self.valid.shape} does not match depth {self.depth.shape}")
        if np.any(self.depth[self.valid] <= 0) or not np.all(np.isfinite(self.depth[self.valid])):
            raise InvalidInputError("layer depth must be positive and finite wherever valid")
        if np.any(self.depth[~self.valid] != 0):
            raise InvalidInputError("layer depth must be stored as 0 where invalid")

    @property
    def shape(self) -> tuple[int, int]:
        return self.depth.shape

    @classmethod
    def empty(cls, height: int, width: int) -> "RgbdLayer":
        return cls(
            color=np.zeros((height, width, 3), dtype=np.uint8),
            depth=np.zeros((height, width), dtype=np.float64),
            valid=np.zeros((height, width), dtype=bool),
        )


@dataclass
class LayeredDepthImage:
    """Two-layer RGB-D image: dense foreground plus partially valid background.

    fg_mask marks pixels whose reference instance occludes another object
    (the content a diminishing pass removes). Immutable by convention after
    construction; nothing in the toolkit mutates a built LDI.
    """

    foreground: RgbdLayer
    background: RgbdLayer
    fg_mask: np.ndarray
    camera: CameraIntrinsics
    ref_pose: RigidPose

    def __post_init__(self):
        self.fg_mask = np.ascontiguousarray(self.fg_mask, dtype=bool)
        h, w = self.foreground.shape
        if (self.camera.height, self.camera.width) != (h, w):
            raise InvalidInputError(
                f"camera {self.camera.height}x{self.camera.width} does not match layers {h}x{w}"
            )
        if self.background.shape != (h, w):
            raise InvalidInputError("background shape does not match foreground")
        if self.fg_mask.shape != (h, w):
            raise InvalidInputError("fg_mask shape does not match layers")
        if not np.all(self.foreground.valid):
            raise InvalidInputError("foreground layer must be dense (valid everywhere)")

    @property
    def shape(self) -> tuple[int, int]:
        return self.foreground.shape


def depth_ordering_violations(ldi: LayeredDepthImage, eps_occ: float) -> int:
    """Count valid background pixels whose depth fails bg > fg + eps_occ.

    Built LDIs must report zero; LDIs whose background was completed by an
    inpainting pass duplicate foreground content and are exempt.
    """
    bad = ldi.background.valid & ~(ldi.background.depth > ldi.foreground.depth + eps_occ)
    return int(np.count_nonzero(bad))


# --- serialization -------------------------------------------------------------------


def _quantize_depth_mm(depth: np.ndarray, valid: np.ndarray, section: str) -> np.ndarray:
    mm = np.round(depth * 1000.0)
    if np.any(mm[valid] < 1) or np.any(mm[valid] > 65535):
        raise InvalidInputError(
            f"{section}: valid depths must quantize into [0.001, {MAX_DEPTH_M}] m for 16-bit storage"
        )
    out = np.zeros(depth.shape, dtype=np.uint16)
    out[valid] = mm[valid].astype(np.uint16)
    return out


def save_ldi(ldi: LayeredDepthImage, path) -> None:
    """Write the container; see module docstring for the byte layout."""
    h, w = ldi.shape
    camera_text = format_camera_text(ldi.camera, ldi.ref_pose).encode("utf-8")
    parts = [
        MAGIC,
        struct.pack("<H", FORMAT_VERSION),
        struct.pack("<II", h, w),
        struct.pack("<I", len(camera_text)),
        camera_text,
        ldi.foreground.color.tobytes(),
        _quantize_depth_mm(ldi.foreground.depth, ldi.foreground.valid, "fg depth").tobytes(),
        ldi.background.color.tobytes(),
        _quantize_depth_mm(ldi.background.depth, ldi.background.valid, "bg depth").tobytes(),
        ldi.background.valid.astype(np.uint8).tobytes(),
        ldi.fg_mask.astype(np.uint8).tobytes(),
    ]
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, section: str) -> bytes:
        if self.pos + n > len(self.data):
            raise LdiFormatError(f"{section} section truncated (needed {n} bytes at offset {self.pos})")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def array(self, dtype, count: int, section: str) -> np.ndarray:
        raw = self.take(count * np.dtype(dtype).itemsize, section)
        return np.frombuffer(raw, dtype=dtype, count=count)


def load_ldi(path) -> LayeredDepthImage:
    """Read a .ldi container; raises LdiFormatError naming the bad section."""
    data = Path(path).read_bytes()
    r = _Reader(data)
    if r.take(4, "header") != MAGIC:
        raise LdiFormatError("header section has wrong magic (not an .ldi container)")
    (version,) = struct.unpack("<H", r.take(2, "header"))
    if version != FORMAT_VERSION:
        raise LdiVersionError(f"unsupported container version {version} (expected {FORMAT_VERSION})")
    h, w = struct.unpack("<II", r.take(8, "header"))
    if h == 0 or w == 0:
        raise LdiFormatError(f"header section has empty image size {h}x{w}")
    (cam_len,) = struct.unpack("<I", r.take(4, "camera"))
    camera_blob = r.take(cam_len, "camera")
    try:
        intr, pose, _ = parse_camera_text(camera_blob.decode("utf-8"))
    except (UnicodeDecodeError, ConfigurationError, InvalidInputError) as exc:
        raise LdiFormatError(f"camera section unparseable: {exc}") from exc
    if (intr.height, intr.width) != (h, w):
        raise LdiFormatError("camera section image size disagrees with header")

    n = h * w
    fg_color = r.array(np.uint8, n * 3, "fg color").reshape(h, w, 3)
    fg_mm = r.array("<u2", n, "fg depth").reshape(h, w)
    bg_color = r.array(np.uint8, n * 3, "bg color").reshape(h, w, 3)
    bg_mm = r.array("<u2", n, "bg depth").reshape(h, w)
    bg_valid_raw = r.array(np.uint8, n, "bg valid").reshape(h, w)
    fg_mask_raw = r.array(np.uint8, n, "fg mask").reshape(h, w)
    if r.pos != len(data):
        raise LdiFormatError(f"container has {len(data) - r.pos} trailing bytes after fg mask section")
    if np.any(bg_valid_raw > 1) or np.any(fg_mask_raw > 1):
        raise LdiFormatError("bg valid / fg mask sections must contain only 0 or 1")

    try:
        fg = RgbdLayer(fg_color, fg_mm.astype(np.float64) / 1000.0, fg_mm > 0)
        bg_valid = bg_valid_raw.astype(bool)
        bg = RgbdLayer(bg_color, bg_mm.astype(np.float64) / 1000.0, bg_valid)
        return LayeredDepthImage(
            foreground=fg,
            background=bg,
            fg_mask=fg_mask_raw.astype(bool),
            camera=intr,
            ref_pose=pose if pose is not None else RigidPose.identity(),
        )
    except InvalidInputError as exc:
        raise LdiFormatError(f"container planes inconsistent: {exc}") from exc
