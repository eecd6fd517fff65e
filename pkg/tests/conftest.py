"""Shared synthetic fixtures: plane scenes with known closed-form behavior."""

from __future__ import annotations

from dataclasses import dataclass

import pytest

from ldikit.geometry import CameraIntrinsics
from ldikit.synthetic import Plane, PlaneScene, render_sweep, sweep_offsets

FIXTURE_CAMERA = CameraIntrinsics(fx=64.0, fy=64.0, cx=32.0, cy=32.0, width=64, height=64)

RED = (200, 60, 40)
BLUE = (40, 80, 200)
GREEN = (60, 180, 90)
GRAY = (120, 120, 120)


@dataclass(frozen=True)
class SceneFixture:
    name: str
    scene: PlaneScene
    offsets: tuple = ()
    as_ray_length: bool = False
    camera: CameraIntrinsics = FIXTURE_CAMERA

    def frames(self):
        return render_sweep(self.scene, self.camera, list(self.offsets), self.as_ray_length)


def two_plane_scene(near_color=RED, far_color=BLUE, textured=False) -> PlaneScene:
    return PlaneScene(
        planes=(
            Plane(z=2.0, instance_id=1, x0=-0.35, x1=0.35, y0=-0.3, y1=0.3,
                  color=None if textured else near_color, texture_seed=3),
            Plane(z=4.0, instance_id=2, color=None if textured else far_color, texture_seed=11),
        )
    )


def three_plane_scene() -> PlaneScene:
    return PlaneScene(
        planes=(
            Plane(z=1.6, instance_id=1, x0=-0.79, x1=-0.31, y0=-0.25, y1=0.25, color=RED),
            Plane(z=2.5, instance_id=2, x0=0.31, x1=0.79, y0=-0.3, y1=0.3, color=GREEN),
            Plane(z=4.0, instance_id=3, color=BLUE),
        )
    )


def oracle_fixtures() -> list[SceneFixture]:
    """The scene set behind the builder-vs-oracle acceptance criterion."""
    n = 20
    return [
        SceneFixture("two_plane_x", two_plane_scene(),
                     offsets=tuple(sweep_offsets(n, (0.04, 0.0, 0.0)))),
        SceneFixture("two_plane_y", two_plane_scene(),
                     offsets=tuple(sweep_offsets(n, (0.0, 0.04, 0.0)))),
        SceneFixture("two_plane_textured", two_plane_scene(textured=True),
                     offsets=tuple(sweep_offsets(n, (0.0625, 0.0, 0.0)))),
        SceneFixture("three_plane_x", three_plane_scene(),
                     offsets=tuple(sweep_offsets(n, (0.03, 0.0, 0.0)))),
        SceneFixture("two_plane_diag", two_plane_scene(far_color=GRAY),
                     offsets=tuple(sweep_offsets(n, (0.03, 0.02, 0.0)))),
        SceneFixture("two_plane_raylen", two_plane_scene(),
                     offsets=tuple(sweep_offsets(n, (0.04, 0.0, 0.0))),
                     as_ray_length=True),
    ]


def zero_motion_fixture() -> SceneFixture:
    return SceneFixture("zero_motion", two_plane_scene(),
                        offsets=tuple(sweep_offsets(20, (0.0, 0.0, 0.0))))


@pytest.fixture(scope="session")
def scene_fixtures():
    return oracle_fixtures()


@pytest.fixture(scope="session")
def built_scenes(scene_fixtures):
    """(fixture, frames, ldi, stats) per oracle scene, built once per session."""
    from ldikit.builder import build_ldi

    out = []
    for fx in scene_fixtures:
        frames = fx.frames()
        ldi, stats = build_ldi(frames)
        out.append((fx, frames, ldi, stats))
    return out


@pytest.fixture(scope="session")
def demo_ldi(built_scenes):
    """One representative built LDI for renderer / service / IO tests."""
    return built_scenes[0][2]
