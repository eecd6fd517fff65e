"""Builder tests: warp contract, occluder scan, and oracle equivalence."""

import numpy as np
import pytest

from conftest import FIXTURE_CAMERA, two_plane_scene, zero_motion_fixture
from oracle import closed_form_two_plane, oracle_build
from ldikit.builder import (
    DEFAULT_EPS_OCC,
    DEFAULT_WINDOW,
    RgbdInstanceFrame,
    WarpedSamples,
    build_ldi,
    collect_occluders,
    default_reference_index,
    extract_fg_mask,
    select_background,
    warp_frame,
)
from ldikit.errors import ConfigurationError
from ldikit.geometry import RigidPose
from ldikit.ldi import depth_ordering_violations
from ldikit.synthetic import Plane, PlaneScene, render_sweep, sweep_offsets


def flat_scene(z=3.0) -> PlaneScene:
    return PlaneScene(planes=(Plane(z=z, instance_id=1, color=(90, 90, 90)),))


def side_by_side_scene() -> PlaneScene:
    # two abutting half-planes, depths equal within eps_occ: nothing occludes
    return PlaneScene(
        planes=(
            Plane(z=3.0, instance_id=1, x1=0.0, color=(200, 0, 0)),
            Plane(z=3.008, instance_id=2, x0=0.0, color=(0, 200, 0)),
        )
    )


class TestWarpFrame:
    def test_identity_transform_maps_to_self(self):
        frame = two_plane_scene().render((0, 0, 0), FIXTURE_CAMERA)
        f = RgbdInstanceFrame(*frame, pose=RigidPose.identity(), camera=FIXTURE_CAMERA)
        samples, stats = warp_frame(f, RigidPose.identity(), FIXTURE_CAMERA)
        assert len(samples) == 64 * 64
        assert np.array_equal(samples.target_u, samples.src_index % 64)
        assert np.array_equal(samples.target_v, samples.src_index // 64)
        assert np.array_equal(samples.depth, f.range_map.reshape(-1))
        assert stats.kept == 64 * 64

    def test_plane_disparity(self):
        # fronto-parallel wall at depth d, source camera at +b: samples land
        # shifted by +fx*b/d in the reference
        d, b = 3.0, 0.09375  # fx*b/d = 64*0.09375/3 = 2.0 exactly
        frame_data = flat_scene(d).render((b, 0, 0), FIXTURE_CAMERA)
        f = RgbdInstanceFrame(*frame_data, pose=RigidPose(np.eye(3), [b, 0, 0]), camera=FIXTURE_CAMERA)
        samples, stats = warp_frame(f, f.pose, FIXTURE_CAMERA)  # ref at origin
        src_u = samples.src_index % 64
        assert np.array_equal(samples.target_u, src_u + 2)
        assert stats.dropped_out_of_bounds == 64 * 2

    def test_zero_depth_pixel_dropped(self):
        frame_data = flat_scene().render((0, 0, 0), FIXTURE_CAMERA)
        color, rng, inst = frame_data
        rng = rng.copy()
        rng[10, 10] = 0.0
        f = RgbdInstanceFrame(color, rng, inst, RigidPose.identity(), FIXTURE_CAMERA)
        samples, stats = warp_frame(f, RigidPose.identity(), FIXTURE_CAMERA)
        assert stats.dropped_invalid_depth == 1
        assert len(samples) == 64 * 64 - 1

    def test_ray_length_frames_convert(self):
        fixture_frames = render_sweep(flat_scene(), FIXTURE_CAMERA, [(0, 0, 0)], as_ray_length=True)
        f = fixture_frames[0]
        assert f.range_map[0, 0] > 3.0  # corner rays longer than depth
        assert np.allclose(f.depth_map(), 3.0)


class TestCollectOccluders:
    def test_single_plane_nothing_occludes(self):
        frames = render_sweep(flat_scene(), FIXTURE_CAMERA, sweep_offsets(5, (0.05, 0, 0)))
        _, stats = build_ldi(frames)
        assert stats.occluders == frozenset()

    def test_two_plane_near_square_detected(self):
        frames = render_sweep(two_plane_scene(), FIXTURE_CAMERA, sweep_offsets(8, (0.05, 0, 0)))
        ldi, stats = build_ldi(frames)
        oracle = oracle_build(frames, default_reference_index(len(frames)), DEFAULT_EPS_OCC)
        assert stats.occluders == frozenset(oracle.occluders) == frozenset({1})

    def test_equal_depth_within_eps_no_occlusion(self):
        frames = render_sweep(side_by_side_scene(), FIXTURE_CAMERA, sweep_offsets(8, (0.05, 0, 0)))
        _, stats = build_ldi(frames)
        assert stats.occluders == frozenset()

    def test_direct_api(self):
        frames = render_sweep(two_plane_scene(), FIXTURE_CAMERA, sweep_offsets(4, (0.06, 0, 0)))
        ref_i = default_reference_index(len(frames))
        ref = frames[ref_i]
        ref_from_world = ref.pose.inverse()
        fwd, rev = [], []
        for i, fr in enumerate(frames):
            if i == ref_i:
                continue
            t = ref_from_world.compose(fr.pose)
            fwd.append(warp_frame(fr, t, ref.camera, source_frame=i)[0])
            rev.append((warp_frame(ref, t.inverse(), fr.camera, source_frame=ref_i)[0], fr))
        assert collect_occluders(fwd, ref, rev, DEFAULT_EPS_OCC) == frozenset({1})


class TestExtractFgMask:
    def test_empty_set_all_background(self):
        frames = render_sweep(flat_scene(), FIXTURE_CAMERA, [(0, 0, 0)])
        assert not extract_fg_mask(frames[0], frozenset()).any()

    def test_mask_is_occluder_footprint(self):
        frames = render_sweep(two_plane_scene(), FIXTURE_CAMERA, [(0, 0, 0)])
        mask = extract_fg_mask(frames[0], frozenset({1}))
        assert np.array_equal(mask, frames[0].instances == 1)

    def test_id_zero_never_foreground(self):
        scene = PlaneScene(
            planes=(
                Plane(z=2.0, instance_id=1, x0=-0.3, x1=0.3, y0=-0.3, y1=0.3, color=(9, 9, 9)),
                Plane(z=4.0, instance_id=0, color=(7, 7, 7)),  # structure carries id 0
            )
        )
        frames = render_sweep(scene, FIXTURE_CAMERA, sweep_offsets(6, (0.05, 0, 0)))
        ldi, stats = build_ldi(frames)
        assert 0 not in stats.occluders
        assert not ldi.fg_mask[frames[len(frames) // 2].instances == 0].any()


class TestOracleEquivalence:
    def test_builder_matches_oracle_everywhere(self, built_scenes):
        for fx, frames, ldi, stats in built_scenes:
            oracle = oracle_build(frames, stats.reference_index, DEFAULT_EPS_OCC)
            assert stats.occluders == frozenset(oracle.occluders), fx.name
            assert np.array_equal(ldi.fg_mask, oracle.fg_mask), fx.name
            assert np.array_equal(ldi.background.valid, oracle.bg_valid), fx.name
            assert np.array_equal(ldi.background.color, oracle.bg_color), fx.name
            diff = np.abs(ldi.background.depth - oracle.bg_depth)
            assert np.max(diff) <= 5e-4, fx.name  # 0.5 mm quantization headroom

    def test_closed_form_band_prediction(self, built_scenes):
        checked = 0
        for fx, frames, ldi, stats in built_scenes:
            planes = fx.scene.planes
            if len(planes) != 2 or any(p.color is None for p in planes) or fx.as_ray_length:
                continue
            fg_mask, bg_valid, far_z, near_id, far_id = closed_form_two_plane(
                fx.scene, list(fx.offsets), fx.camera, stats.reference_index
            )
            assert np.array_equal(ldi.fg_mask, fg_mask), fx.name
            assert np.array_equal(ldi.background.valid, bg_valid), fx.name
            assert np.all(ldi.background.depth[bg_valid] == far_z), fx.name
            far_color = next(p.color for p in planes if p.instance_id == far_id)
            assert np.all(ldi.background.color[bg_valid] == np.array(far_color)), fx.name
            assert stats.occluders == frozenset({near_id}), fx.name
            checked += 1
        assert checked >= 2  # x sweep, y sweep, diagonal

    def test_zero_motion_reveals_nothing(self):
        frames = zero_motion_fixture().frames()
        ldi, stats = build_ldi(frames)
        oracle = oracle_build(frames, stats.reference_index, DEFAULT_EPS_OCC)
        # no parallax: no warp lands in front of a different instance anywhere
        assert stats.occluders == frozenset() == frozenset(oracle.occluders)
        assert not ldi.fg_mask.any()
        assert not ldi.background.valid.any()


class TestValidityConditions:
    def test_conditions_hold_on_every_fixture(self, built_scenes):
        for fx, frames, ldi, stats in built_scenes:
            ref = frames[stats.reference_index]
            # condition 1: bg depth above fg depth by eps wherever valid
            assert depth_ordering_violations(ldi, DEFAULT_EPS_OCC) == 0, fx.name
            bgv = ldi.background.valid
            # condition 2: bg never shares the reference instance
            assert not np.any(stats.bg_instances[bgv] == ref.instances[bgv]), fx.name
            # condition 3: no contributing instance is an occluder
            contributing = set(np.unique(stats.bg_instances[bgv]).tolist())
            assert not (contributing & set(stats.occluders)), fx.name

    def test_instance_exclusivity(self, built_scenes):
        for fx, frames, ldi, stats in built_scenes:
            ref = frames[stats.reference_index]
            bg_ids = set(np.unique(stats.bg_instances[ldi.background.valid]).tolist())
            fg_ids = set(np.unique(ref.instances[ldi.fg_mask]).tolist())
            assert bg_ids.isdisjoint(fg_ids), fx.name

    def test_bg_only_inside_fg_mask(self, built_scenes):
        for fx, frames, ldi, stats in built_scenes:
            assert not np.any(ldi.background.valid & ~ldi.fg_mask), fx.name


class TestDeterminismAndMonotonicity:
    def test_build_twice_bit_identical(self):
        frames = render_sweep(two_plane_scene(), FIXTURE_CAMERA, sweep_offsets(10, (0.04, 0, 0)))
        a, _ = build_ldi(frames)
        b, _ = build_ldi(frames)
        assert np.array_equal(a.background.color, b.background.color)
        assert np.array_equal(a.background.depth, b.background.depth)
        assert np.array_equal(a.fg_mask, b.fg_mask)

    def _warps(self, frames, ref_i):
        ref = frames[ref_i]
        out = []
        for i, fr in enumerate(frames):
            if i == ref_i:
                continue
            t = ref.pose.inverse().compose(fr.pose)
            out.append(warp_frame(fr, t, ref.camera, source_frame=i)[0])
        return out

    def test_selection_invariant_to_frame_order(self):
        frames = render_sweep(two_plane_scene(), FIXTURE_CAMERA, sweep_offsets(10, (0.04, 0, 0)))
        ref_i = default_reference_index(len(frames))
        ldi, stats = build_ldi(frames)
        warps = self._warps(frames, ref_i)
        ref = frames[ref_i]
        for order in ([*reversed(warps)], warps[1::2] + warps[0::2]):
            bg, bg_inst, _ = select_background(
                order, ref.depth_map(), ref.instances, ldi.fg_mask, stats.occluders, DEFAULT_EPS_OCC
            )
            assert np.array_equal(bg.color, ldi.background.color)
            assert np.array_equal(bg.depth, ldi.background.depth)
            assert np.array_equal(bg_inst, stats.bg_instances)

    def test_adding_frames_only_fills_or_lowers(self):
        # min-selection monotonicity under a fixed occluder set
        frames = render_sweep(two_plane_scene(), FIXTURE_CAMERA, sweep_offsets(12, (0.04, 0, 0)))
        ref_i = default_reference_index(len(frames))
        ref = frames[ref_i]
        ldi, stats = build_ldi(frames)
        warps = self._warps(frames, ref_i)
        prev_valid = np.zeros((64, 64), bool)
        prev_depth = np.full((64, 64), np.inf)
        for k in range(1, len(warps) + 1):
            bg, _, _ = select_background(
                warps[:k], ref.depth_map(), ref.instances, ldi.fg_mask, stats.occluders, DEFAULT_EPS_OCC
            )
            assert np.all(prev_valid <= bg.valid)  # never invalidates a pixel
            both = prev_valid & bg.valid
            assert np.all(bg.depth[both] <= prev_depth[both])  # only decreases
            prev_valid = bg.valid
            prev_depth = np.where(bg.valid, bg.depth, np.inf)

    def test_candidates_outside_mask_are_dropped(self):
        # a sample passing conditions 1-3 at a non-mask pixel stays out of layer 2
        fg_depth = np.full((4, 4), 2.0)
        ref_inst = np.full((4, 4), 7)
        fg_mask = np.zeros((4, 4), bool)
        fg_mask[1, 1] = True
        samples = WarpedSamples(
            target_u=np.array([2, 1]),
            target_v=np.array([2, 1]),
            depth=np.array([5.0, 5.0]),
            color=np.array([[9, 9, 9], [8, 8, 8]], dtype=np.uint8),
            instance=np.array([3, 3]),
            src_index=np.array([0, 1]),
            source_frame=0,
        )
        bg, _, _ = select_background([samples], fg_depth, ref_inst, fg_mask, frozenset(), 0.01)
        assert not bg.valid[2, 2]  # outside mask: dropped
        assert bg.valid[1, 1] and bg.depth[1, 1] == 5.0


class TestConfiguration:
    def test_needs_two_frames(self):
        frames = render_sweep(flat_scene(), FIXTURE_CAMERA, [(0, 0, 0)])
        with pytest.raises(ConfigurationError):
            build_ldi(frames)

    def test_missing_instances_rejected(self):
        frames = render_sweep(flat_scene(), FIXTURE_CAMERA, sweep_offsets(3, (0.05, 0, 0)))
        frames[1] = RgbdInstanceFrame(
            frames[1].color, frames[1].range_map, None, frames[1].pose, frames[1].camera
        )
        with pytest.raises(ConfigurationError, match="instance"):
            build_ldi(frames)

    def test_reference_needs_dense_depth(self):
        frames = render_sweep(flat_scene(), FIXTURE_CAMERA, sweep_offsets(3, (0.05, 0, 0)))
        rng = frames[1].range_map.copy()
        rng[0, 0] = 0.0
        frames[1] = RgbdInstanceFrame(frames[1].color, rng, frames[1].instances, frames[1].pose, frames[1].camera)
        with pytest.raises(ConfigurationError, match="dense"):
            build_ldi(frames, ref_index=1)

    def test_bad_reference_index(self):
        frames = render_sweep(flat_scene(), FIXTURE_CAMERA, sweep_offsets(3, (0.05, 0, 0)))
        with pytest.raises(ConfigurationError):
            build_ldi(frames, ref_index=3)

    def test_paper_window_defaults(self):
        assert DEFAULT_WINDOW == 20
        assert default_reference_index(20) == 10
        assert default_reference_index(5) == 2
