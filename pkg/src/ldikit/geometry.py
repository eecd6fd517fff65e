"""Pinhole camera math: projection, unprojection, ray-length conversion, rigid transforms.

Conventions (fixed for the whole toolkit):
  - camera looks along +z, x right, y down (image-aligned)
  - integer pixel coordinate (u, v) addresses the center of column u, row v
  - depth is the z coordinate in the camera frame (distance from the camera plane)
  - arrays are indexed [row, col] = [v, u]
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BehindCameraError,
    ConfigurationError,
    InvalidDepthError,
    InvalidInputError,
)

# Tolerance for rotation orthonormality checks.
ROTATION_TOL = 1e-6


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics. fx, fy, cx, cy in pixels; width/height in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidInputError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (self.width > 0 and self.height > 0):
            raise InvalidInputError(f"image size must be positive, got {self.width}x{self.height}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InvalidInputError(
                f"principal point ({self.cx}, {self.cy}) outside image {self.width}x{self.height}"
            )

    @property
    def matrix(self) -> np.ndarray:
        """3x3 intrinsic matrix K."""
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]],
            dtype=np.float64,
        )

    def contains(self, u, v):
        """True where integer pixel (u, v) lies inside [0,width) x [0,height)."""
        return (u >= 0) & (u < self.width) & (v >= 0) & (v < self.height)

    def pixel_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """(u, v) integer coordinate arrays of shape (height, width)."""
        v, u = np.mgrid[0 : self.height, 0 : self.width]
        return u, v


def _as_rotation(rotation) -> np.ndarray:
    r = np.asarray(rotation, dtype=np.float64)
    if r.shape != (3, 3):
        raise InvalidInputError(f"rotation must be 3x3, got shape {r.shape}")
    if not np.allclose(r @ r.T, np.eye(3), atol=ROTATION_TOL):
        raise InvalidInputError("rotation matrix is not orthonormal")
    if np.linalg.det(r) < 0:
        raise InvalidInputError("rotation matrix has negative determinant (reflection)")
    return r


@dataclass(frozen=True)
class RigidPose:
    """SE(3) transform: apply(p) = rotation @ p + translation."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = _as_rotation(self.rotation)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidPose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m) -> "RigidPose":
        """Build from a 4x4 (or 3x4) homogeneous transform."""
        m = np.asarray(m, dtype=np.float64)
        if m.shape == (16,):
            m = m.reshape(4, 4)
        if m.shape not in ((4, 4), (3, 4)):
            raise InvalidInputError(f"pose matrix must be 4x4 or 3x4, got {m.shape}")
        if m.shape == (4, 4) and not np.allclose(m[3], [0, 0, 0, 1], atol=1e-9):
            raise InvalidInputError("pose matrix bottom row is not [0 0 0 1]")
        return cls(m[:3, :3], m[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        """4x4 homogeneous transform."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "RigidPose") -> "RigidPose":
        """self after other: compose(A, B).apply(p) == A.apply(B.apply(p))."""
        return RigidPose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidPose":
        rt = self.rotation.T
        return RigidPose(rt, -(rt @ self.translation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform points of shape (..., 3)."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation


def transform_point(pose: RigidPose, point) -> np.ndarray:
    """R @ point + t for a single point or an array of shape (..., 3)."""
    return pose.apply(point)


def ray_to_depth(ray_len, intrinsics: CameraIntrinsics, u, v):
    """Convert ray length (distance from camera center) to plane depth.

    depth = ray_len / ||K^-1 (u, v, 1)||_2
    The homogeneous ray direction has norm >= 1, so the result never
    exceeds the ray length; the two are equal only at the principal point.
    Accepts scalars or broadcastable arrays.
    """
    r = np.asarray(ray_len, dtype=np.float64)
    if not np.all(np.isfinite(r)):
        raise InvalidInputError("ray length must be finite")
    if np.any(r < 0):
        raise InvalidInputError("ray length must be non-negative")
    if not np.all(intrinsics.contains(u, v)):
        raise InvalidInputError("pixel coordinates outside image bounds")
    xn = (np.asarray(u, dtype=np.float64) - intrinsics.cx) / intrinsics.fx
    yn = (np.asarray(v, dtype=np.float64) - intrinsics.cy) / intrinsics.fy
    norm = np.sqrt(xn * xn + yn * yn + 1.0)
    out = r / norm
    return float(out) if out.ndim == 0 else out


def ray_to_depth_map(ray_map: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Convert a full H x W ray-length image to a depth image."""
    ray_map = np.asarray(ray_map, dtype=np.float64)
    if ray_map.shape != (intrinsics.height, intrinsics.width):
        raise InvalidInputError(
            f"ray map shape {ray_map.shape} does not match camera {intrinsics.height}x{intrinsics.width}"
        )
    u, v = intrinsics.pixel_grid()
    return ray_to_depth(ray_map, intrinsics, u, v)


def unproject(u, v, depth, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Pixel plus depth to camera-frame point ((u-cx)d/fx, (v-cy)d/fy, d).

    Returns shape (..., 3); scalar inputs give shape (3,).
    """
    d = np.asarray(depth, dtype=np.float64)
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise InvalidDepthError("depth must be finite and positive")
    x = (np.asarray(u, dtype=np.float64) - intrinsics.cx) * d / intrinsics.fx
    y = (np.asarray(v, dtype=np.float64) - intrinsics.cy) * d / intrinsics.fy
    return np.stack(np.broadcast_arrays(x, y, d), axis=-1)


def unproject_map(depth_map: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Unproject every pixel of a dense positive depth image to (H, W, 3)."""
    u, v = intrinsics.pixel_grid()
    return unproject(u, v, depth_map, intrinsics)


def project(points, intrinsics: CameraIntrinsics):
    """Perspective-project camera-frame points to continuous pixel coordinates.

    Returns (u, v, depth) where u = fx*x/z + cx, v = fy*y/z + cy, depth = z.
    Scaling a point by s > 0 leaves (u, v) unchanged and scales depth by s.
    Raises BehindCameraError if any z <= 0; callers that splat should filter first.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[-1] != 3:
        raise InvalidInputError(f"points must have shape (..., 3), got {pts.shape}")
    z = pts[..., 2]
    if np.any(z <= 0):
        raise BehindCameraError("point with z <= 0 cannot be projected")
    u = intrinsics.fx * pts[..., 0] / z + intrinsics.cx
    v = intrinsics.fy * pts[..., 1] / z + intrinsics.cy
    if pts.ndim == 1:
        return float(u), float(v), float(z)
    return u, v, z


# --- camera metadata text documents -------------------------------------------------

_CAMERA_KEYS = ("fx", "fy", "cx", "cy", "width", "height")


def format_camera_text(intrinsics: CameraIntrinsics, pose: RigidPose | None = None) -> str:
    """Serialize intrinsics (and optionally a camera-to-world pose) as key: value lines.

    The pose is written as 16 row-major floats of the 4x4 matrix, in meters.
    """
    lines = [
        f"fx: {float(intrinsics.fx)!r}",
        f"fy: {float(intrinsics.fy)!r}",
        f"cx: {float(intrinsics.cx)!r}",
        f"cy: {float(intrinsics.cy)!r}",
        f"width: {int(intrinsics.width)}",
        f"height: {int(intrinsics.height)}",
    ]
    if pose is not None:
        flat = " ".join(repr(float(x)) for x in pose.matrix.reshape(-1))
        lines.append(f"pose: {flat}")
    return "\n".join(lines) + "\n"


def parse_camera_text(text: str) -> tuple[CameraIntrinsics, RigidPose | None, dict]:
    """Parse the key: value camera document. Returns (intrinsics, pose, extras).

    Unknown keys are preserved in extras so sequence loaders can carry flags
    (for example range_unit) in the same file.
    """
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise ConfigurationError(f"camera metadata line {lineno} is not 'key: value': {raw!r}")
        key, value = line.split(":", 1)
        fields[key.strip()] = value.strip()
    missing = [k for k in _CAMERA_KEYS if k not in fields]
    if missing:
        raise ConfigurationError(f"camera metadata missing fields: {', '.join(missing)}")
    try:
        intr = CameraIntrinsics(
            fx=float(fields["fx"]),
            fy=float(fields["fy"]),
            cx=float(fields["cx"]),
            cy=float(fields["cy"]),
            width=int(fields["width"]),
            height=int(fields["height"]),
        )
    except ValueError as exc:
        raise ConfigurationError(f"camera metadata has a malformed numeric field: {exc}") from exc
    pose = None
    if "pose" in fields:
        values = fields["pose"].split()
        if len(values) != 16:
            raise ConfigurationError(f"pose must be 16 row-major floats, got {len(values)}")
        pose = RigidPose.from_matrix(np.array([float(x) for x in values]).reshape(4, 4))
    extras = {k: v for k, v in fields.items() if k not in _CAMERA_KEYS and k != "pose"}
    return intr, pose, extras
