"""Analytic plane scenes for fixtures and demos.

A scene is a set of fronto-parallel rectangles at constant z in a shared
world frame whose origin coincides with the reference camera. Cameras are
pure translations, so every rendered quantity (depth, coverage, lattice
texture index) has a closed form; tests exploit that to predict builder and
renderer output exactly. Textures are anchored to a per-plane integer
lattice in world units of one reference-pixel footprint, which keeps colors
consistent across views.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .builder import RgbdInstanceFrame
from .geometry import CameraIntrinsics, RigidPose

DEMO_CAMERA = CameraIntrinsics(fx=64.0, fy=64.0, cx=32.0, cy=32.0, width=64, height=64)


@dataclass(frozen=True)
class Plane:
    """Axis-aligned rectangle at constant world z, facing the cameras.

    Extents are world meters; use infinities for a wall that always fills the
    view. color is a uniform RGB triple, or None for the lattice texture.
    """

    z: float
    instance_id: int
    x0: float = -np.inf
    x1: float = np.inf
    y0: float = -np.inf
    y1: float = np.inf
    color: tuple[int, int, int] | None = None
    texture_seed: int = 0

    def covers(self, x, y):
        return (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)


_TEXTURE_SIZE = 257


def _lattice_texture(plane: Plane, x, y, footprint: float) -> np.ndarray:
    """Color from a seeded random lattice indexed by world position."""
    rng = np.random.default_rng(plane.texture_seed + plane.instance_id * 7919)
    table = rng.integers(0, 256, size=(_TEXTURE_SIZE, _TEXTURE_SIZE, 3), dtype=np.uint8)
    j = np.rint(np.asarray(x) / footprint).astype(np.int64) % _TEXTURE_SIZE
    i = np.rint(np.asarray(y) / footprint).astype(np.int64) % _TEXTURE_SIZE
    return table[i, j]


@dataclass(frozen=True)
class PlaneScene:
    planes: tuple[Plane, ...]

    def render(
        self, cam_pos: tuple[float, float, float], camera: CameraIntrinsics
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """First-hit raycast from a translated camera. Returns (color, depth, instances).

        Every pixel must hit something; put an infinite plane behind the scene.
        """
        ox, oy, oz = cam_pos
        u, v = camera.pixel_grid()
        h, w = u.shape
        color = np.zeros((h, w, 3), dtype=np.uint8)
        depth = np.zeros((h, w), dtype=np.float64)
        instances = np.zeros((h, w), dtype=np.int64)
        filled = np.zeros((h, w), dtype=bool)
        footprint = 1.0 / camera.fx  # world meters per pixel at z = 1

        for plane in sorted(self.planes, key=lambda p: p.z):
            d = plane.z - oz
            if d <= 0:
                continue
            x = ox + (u - camera.cx) * d / camera.fx
            y = oy + (v - camera.cy) * d / camera.fy
            hit = ~filled & plane.covers(x, y)
            if not np.any(hit):
                continue
            if plane.color is not None:
                color[hit] = np.asarray(plane.color, dtype=np.uint8)
            else:
                color[hit] = _lattice_texture(plane, x[hit], y[hit], footprint * plane.z)
            depth[hit] = d
            instances[hit] = plane.instance_id
            filled |= hit
        if not np.all(filled):
            raise ValueError("scene does not cover the full view; add a backdrop plane")
        return color, depth, instances


def sweep_offsets(n_frames: int, step: tuple[float, float, float]) -> list[tuple[float, float, float]]:
    """Camera positions for a linear sweep centered on the reference frame."""
    mid = n_frames // 2
    sx, sy, sz = step
    return [((i - mid) * sx, (i - mid) * sy, (i - mid) * sz) for i in range(n_frames)]


def render_sweep(
    scene: PlaneScene,
    camera: CameraIntrinsics,
    offsets: list[tuple[float, float, float]],
    as_ray_length: bool = False,
) -> list[RgbdInstanceFrame]:
    """Render one frame per camera offset, posed camera-to-world."""
    frames = []
    for pos in offsets:
        color, depth, instances = scene.render(pos, camera)
        rng = depth
        if as_ray_length:
            u, v = camera.pixel_grid()
            xn = (u - camera.cx) / camera.fx
            yn = (v - camera.cy) / camera.fy
            rng = depth * np.sqrt(xn * xn + yn * yn + 1.0)
        frames.append(
            RgbdInstanceFrame(
                color=color,
                range_map=rng,
                instances=instances,
                pose=RigidPose(np.eye(3), np.asarray(pos, dtype=np.float64)),
                camera=camera,
                range_is_ray_length=as_ray_length,
            )
        )
    return frames


def demo_scene() -> PlaneScene:
    """Near square over a far wall; the stock two-plane demo."""
    return PlaneScene(
        planes=(
            Plane(z=2.0, instance_id=1, x0=-0.35, x1=0.35, y0=-0.3, y1=0.3, color=(200, 60, 40)),
            Plane(z=4.0, instance_id=2, color=None, texture_seed=11),
        )
    )


def main(argv: list[str] | None = None) -> int:
    """Write a demo sequence directory: python -m ldikit.synthetic OUT_DIR."""
    import argparse

    from .sequence import save_sequence

    parser = argparse.ArgumentParser(description="generate a synthetic two-plane RGB-D sequence")
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--frames", type=int, default=20)
    parser.add_argument("--step", type=float, default=0.02, help="x step between frames (m)")
    args = parser.parse_args(argv)
    frames = render_sweep(demo_scene(), DEMO_CAMERA, sweep_offsets(args.frames, (args.step, 0.0, 0.0)))
    save_sequence(args.out_dir, frames)
    print(f"wrote {len(frames)} frames to {args.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
