"""Independent oracle for two-layer builds on fronto-parallel plane scenes.

Everything here is scalar Python math, written separately from the package:
pixels are warped one by one with hand formulas, the three validity
conditions are applied literally, and the per-pixel minimum is tracked in a
plain dict. A second, closed-form predictor derives the disoccluded band of
uniform two-plane scenes from scene geometry alone (integer disparity
shifts and footprint interval tests), touching no image data at all.
Cameras must be pure translations, which all fixtures satisfy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


@dataclass
class OracleLdi:
    occluders: set
    fg_mask: np.ndarray
    bg_color: np.ndarray
    bg_depth: np.ndarray
    bg_valid: np.ndarray


def _scalar_depths(frame) -> list[list[float]]:
    cam = frame.camera
    rng = frame.range_map.tolist()
    if not frame.range_is_ray_length:
        return rng
    out = []
    for v in range(cam.height):
        row = []
        for u in range(cam.width):
            xn = (u - cam.cx) / cam.fx
            yn = (v - cam.cy) / cam.fy
            row.append(rng[v][u] / math.sqrt(xn * xn + yn * yn + 1.0))
        out.append(row)
    return out


def oracle_build(frames, ref_index: int, eps_occ: float) -> OracleLdi:
    """Brute-force scalar re-derivation of occluders, mask, and background."""
    cam = frames[ref_index].camera
    fx, fy, cx, cy = cam.fx, cam.fy, cam.cx, cam.cy
    w, h = cam.width, cam.height
    positions = []
    for f in frames:
        assert np.array_equal(f.pose.rotation, np.eye(3)), "oracle handles pure translation only"
        positions.append(tuple(f.pose.translation.tolist()))
    depths = [_scalar_depths(f) for f in frames]
    instances = [f.instances.tolist() for f in frames]
    ref_depth, ref_inst = depths[ref_index], instances[ref_index]
    rx, ry, rz = positions[ref_index]

    def warp(u, v, d, src_pos, dst_pos):
        if d <= 0:
            return None
        x = src_pos[0] + (u - cx) * d / fx - dst_pos[0]
        y = src_pos[1] + (v - cy) * d / fy - dst_pos[1]
        z = src_pos[2] + d - dst_pos[2]
        if z <= 0:
            return None
        tu = round_half_away(fx * x / z + cx)
        tv = round_half_away(fy * y / z + cy)
        if 0 <= tu < w and 0 <= tv < h:
            return tu, tv, z
        return None

    supportive = [i for i in range(len(frames)) if i != ref_index]

    # the nearer instance of any depth-separated pair along a ray occludes;
    # evidence is gathered from both warp directions
    occluders: set[int] = set()
    for i in supportive:
        dep, inst, pos = depths[i], instances[i], positions[i]
        for v in range(h):
            for u in range(w):
                t = warp(u, v, dep[v][u], pos, (rx, ry, rz))
                if t is None:
                    continue
                tu, tv, z = t
                sid, tid = inst[v][u], ref_inst[tv][tu]
                if sid != tid:
                    if sid != 0 and z < ref_depth[tv][tu] - eps_occ:
                        occluders.add(sid)
                    if tid != 0 and z > ref_depth[tv][tu] + eps_occ:
                        occluders.add(tid)
        for v in range(h):
            for u in range(w):
                t = warp(u, v, ref_depth[v][u], (rx, ry, rz), pos)
                if t is None:
                    continue
                tu, tv, z = t
                sid, tid = ref_inst[v][u], inst[tv][tu]
                if sid != tid:
                    if sid != 0 and z < dep[tv][tu] - eps_occ:
                        occluders.add(sid)
                    if tid != 0 and z > dep[tv][tu] + eps_occ:
                        occluders.add(tid)

    fg_mask = np.zeros((h, w), dtype=bool)
    for v in range(h):
        for u in range(w):
            fg_mask[v, u] = ref_inst[v][u] in occluders

    best: dict[tuple[int, int], tuple] = {}
    for i in supportive:
        dep, inst, pos = depths[i], instances[i], positions[i]
        colors = frames[i].color.tolist()
        for v in range(h):
            for u in range(w):
                t = warp(u, v, dep[v][u], pos, (rx, ry, rz))
                if t is None:
                    continue
                tu, tv, z = t
                sid = inst[v][u]
                if (
                    z > ref_depth[tv][tu] + eps_occ
                    and sid != ref_inst[tv][tu]
                    and sid not in occluders
                    and fg_mask[tv, tu]
                ):
                    key = (z, i, v * w + u)
                    if (tu, tv) not in best or key < best[(tu, tv)][0]:
                        best[(tu, tv)] = (key, colors[v][u], sid)

    bg_color = np.zeros((h, w, 3), dtype=np.uint8)
    bg_depth = np.zeros((h, w), dtype=np.float64)
    bg_valid = np.zeros((h, w), dtype=bool)
    for (tu, tv), (key, col, _sid) in best.items():
        bg_color[tv, tu] = col
        bg_depth[tv, tu] = key[0]
        bg_valid[tv, tu] = True
    return OracleLdi(occluders, fg_mask, bg_color, bg_depth, bg_valid)


def harmonic_oracle(channel: np.ndarray, hole: np.ndarray) -> np.ndarray:
    """Direct sparse solve of the hole Laplace system, assembled with loops.

    Each hole pixel equals the mean of its in-bounds 4-neighbors; non-hole
    pixels are Dirichlet data. Independent of the Jacobi implementation.
    """
    from scipy.sparse import lil_matrix
    from scipy.sparse.linalg import spsolve

    h, w = channel.shape
    hole_idx = {(v, u): k for k, (v, u) in enumerate(zip(*np.nonzero(hole)))}
    n = len(hole_idx)
    a = lil_matrix((n, n))
    b = np.zeros(n)
    for (v, u), k in hole_idx.items():
        neighbors = [(v + dv, u + du) for dv, du in ((1, 0), (-1, 0), (0, 1), (0, -1))
                     if 0 <= v + dv < h and 0 <= u + du < w]
        a[k, k] = len(neighbors)
        for q in neighbors:
            if q in hole_idx:
                a[k, hole_idx[q]] = -1.0
            else:
                b[k] += channel[q]
    out = channel.astype(np.float64).copy()
    if n:
        out[hole] = spsolve(a.tocsr(), b)
    return out


def _footprint_pixels(plane, camera, pos) -> np.ndarray:
    """Pixel-center coverage of a plane seen from a translated camera."""
    ox, oy, oz = pos
    d = plane.z - oz
    u, v = camera.pixel_grid()
    x = ox + (u - camera.cx) * d / camera.fx
    y = oy + (v - camera.cy) * d / camera.fy
    return plane.covers(x, y)


def closed_form_two_plane(scene, offsets, camera, ref_index: int):
    """Geometry-only prediction for a uniform-color near-square / far-wall scene.

    Returns (fg_mask, bg_valid, far_z, near_id, far_id). The revealed set of a
    supportive view is the reference near footprint minus pixels whose
    contributing source pixel is out of bounds or blocked by the near square
    in that view; no frame imagery is consulted.
    """
    near, far = sorted(scene.planes, key=lambda p: p.z)
    ref_pos = offsets[ref_index]
    fg_mask = _footprint_pixels(near, camera, ref_pos)

    h, w = camera.height, camera.width
    bg_valid = np.zeros((h, w), dtype=bool)
    pu, pv = camera.pixel_grid()
    for i, pos in enumerate(offsets):
        if i == ref_index:
            continue
        du = round_half_away(camera.fx * (pos[0] - ref_pos[0]) / far.z)
        dv = round_half_away(camera.fy * (pos[1] - ref_pos[1]) / far.z)
        us, vs = pu - du, pv - dv
        inside = (us >= 0) & (us < w) & (vs >= 0) & (vs < h)
        usc, vsc = np.clip(us, 0, w - 1), np.clip(vs, 0, h - 1)
        near_in_view = _footprint_pixels(near, camera, pos)
        sees_far = inside & ~near_in_view[vsc, usc]
        bg_valid |= fg_mask & sees_far
    return fg_mask, bg_valid, far.z, near.instance_id, far.instance_id
