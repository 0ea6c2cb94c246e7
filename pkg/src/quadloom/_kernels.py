"""Hot numeric kernels with numba-accelerated and pure-numpy twins.

Every public kernel here has two implementations that produce identical
results: a numba ``@njit`` version and a vectorized/looped numpy fallback.
The active path is chosen at import time; set ``QUADLOOM_NO_NUMBA=1`` to
force the numpy fallback (or it is used automatically when numba is not
importable).  ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_FLAG = os.environ.get("QUADLOOM_NO_NUMBA", "").strip()
_FORCE_NUMPY = _ENV_FLAG not in ("", "0")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


USE_NUMBA = HAS_NUMBA and not _FORCE_NUMPY


# ---------------------------------------------------------------------------
# farthest point sampling
# ---------------------------------------------------------------------------

def fps_numpy(positions: np.ndarray, k: int, start: int) -> np.ndarray:
    """Greedy farthest-point subsample; ties broken by lowest index."""
    n = positions.shape[0]
    k = min(k, n)
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = start
    d2 = np.sum((positions - positions[start]) ** 2, axis=1)
    for i in range(1, k):
        nxt = int(np.argmax(d2))
        chosen[i] = nxt
        np.minimum(d2, np.sum((positions - positions[nxt]) ** 2, axis=1), out=d2)
    return chosen


@njit(cache=True)
def _fps_jit(positions, k, start):
    n = positions.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = start
    d2 = np.empty(n, dtype=np.float64)
    sx, sy, sz = positions[start, 0], positions[start, 1], positions[start, 2]
    for j in range(n):
        dx = positions[j, 0] - sx
        dy = positions[j, 1] - sy
        dz = positions[j, 2] - sz
        d2[j] = dx * dx + dy * dy + dz * dz
    for i in range(1, k):
        best = 0
        best_d = d2[0]
        for j in range(1, n):
            if d2[j] > best_d:
                best_d = d2[j]
                best = j
        chosen[i] = best
        bx, by, bz = positions[best, 0], positions[best, 1], positions[best, 2]
        for j in range(n):
            dx = positions[j, 0] - bx
            dy = positions[j, 1] - by
            dz = positions[j, 2] - bz
            nd = dx * dx + dy * dy + dz * dz
            if nd < d2[j]:
                d2[j] = nd
    return chosen


def fps_numba(positions: np.ndarray, k: int, start: int) -> np.ndarray:
    n = positions.shape[0]
    return _fps_jit(np.ascontiguousarray(positions, dtype=np.float64), min(k, n), start)


# ---------------------------------------------------------------------------
# exact point-to-triangle squared distance (Ericson's region test)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _pt_tri_sqdist_jit(px, py, pz, ax, ay, az, bx, by, bz, cx, cy, cz):
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return apx * apx + apy * apy + apz * apz
    bpx, bpy, bpz = px - bx, py - by, pz - bz
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bpx * bpx + bpy * bpy + bpz * bpz
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        qx = apx - v * abx
        qy = apy - v * aby
        qz = apz - v * abz
        return qx * qx + qy * qy + qz * qz
    cpx, cpy, cpz = px - cx, py - cy, pz - cz
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cpx * cpx + cpy * cpy + cpz * cpz
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        qx = apx - w * acx
        qy = apy - w * acy
        qz = apz - w * acz
        return qx * qx + qy * qy + qz * qz
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        qx = bpx - w * (cx - bx)
        qy = bpy - w * (cy - by)
        qz = bpz - w * (cz - bz)
        return qx * qx + qy * qy + qz * qz
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    qx = apx - v * abx - w * acx
    qy = apy - v * aby - w * acy
    qz = apz - v * abz - w * acz
    return qx * qx + qy * qy + qz * qz


@njit(cache=True)
def _min_sqdist_jit(points, ta, tb, tc, cand_off, cand_idx):
    n = points.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        best = np.inf
        for j in range(cand_off[i], cand_off[i + 1]):
            t = cand_idx[j]
            d = _pt_tri_sqdist_jit(
                px, py, pz,
                ta[t, 0], ta[t, 1], ta[t, 2],
                tb[t, 0], tb[t, 1], tb[t, 2],
                tc[t, 0], tc[t, 1], tc[t, 2],
            )
            if d < best:
                best = d
        out[i] = best
    return out


def _closest_sqdist_np(p, a, b, c):
    """Vectorized point-triangle squared distance; all args (n, 3)."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.where(d1 - d3 != 0.0, d1 / (d1 - d3), 0.0)
        w_ac = np.where(d2 - d6 != 0.0, d2 / (d2 - d6), 0.0)
        den_bc = (d4 - d3) + (d5 - d6)
        w_bc = np.where(den_bc != 0.0, (d4 - d3) / den_bc, 0.0)
        den = va + vb + vc
        v_in = np.where(den != 0.0, vb / den, 0.0)
        w_in = np.where(den != 0.0, vc / den, 0.0)

    q = a + v_in[:, None] * ab + w_in[:, None] * ac
    q = np.where((va <= 0)[:, None] & (d4 - d3 >= 0)[:, None] & (d5 - d6 >= 0)[:, None],
                 b + np.clip(w_bc, 0, 1)[:, None] * (c - b), q)
    q = np.where((vb <= 0)[:, None] & (d2 >= 0)[:, None] & (d6 <= 0)[:, None],
                 a + np.clip(w_ac, 0, 1)[:, None] * ac, q)
    q = np.where((vc <= 0)[:, None] & (d1 >= 0)[:, None] & (d3 <= 0)[:, None],
                 a + np.clip(v_ab, 0, 1)[:, None] * ab, q)
    q = np.where((d6 >= 0)[:, None] & (d5 <= d6)[:, None], c, q)
    q = np.where((d3 >= 0)[:, None] & (d4 <= d3)[:, None], b, q)
    q = np.where((d1 <= 0)[:, None] & (d2 <= 0)[:, None], a, q)
    diff = p - q
    return np.einsum("ij,ij->i", diff, diff)


def min_sqdist_numpy(points, ta, tb, tc, cand_off, cand_idx):
    n = points.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        sel = cand_idx[cand_off[i]:cand_off[i + 1]]
        if sel.size == 0:
            out[i] = np.inf
            continue
        p = np.broadcast_to(points[i], (sel.size, 3))
        out[i] = np.min(_closest_sqdist_np(p, ta[sel], tb[sel], tc[sel]))
    return out


def min_sqdist_numba(points, ta, tb, tc, cand_off, cand_idx):
    return _min_sqdist_jit(
        np.ascontiguousarray(points, dtype=np.float64),
        np.ascontiguousarray(ta, dtype=np.float64),
        np.ascontiguousarray(tb, dtype=np.float64),
        np.ascontiguousarray(tc, dtype=np.float64),
        np.ascontiguousarray(cand_off, dtype=np.int64),
        np.ascontiguousarray(cand_idx, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# constrained field diffusion sweeps (damped Jacobi on unit complex values)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _field_sweeps_jit(z, nbr_off, nbr_idx, nbr_rot, free, lam, iters, tol):
    n = z.shape[0]
    z_new = z.copy()
    max_delta = 0.0
    used = 0
    for it in range(iters):
        max_delta = 0.0
        for f in range(n):
            if not free[f]:
                z_new[f] = z[f]
                continue
            acc = lam * z[f]
            for j in range(nbr_off[f], nbr_off[f + 1]):
                acc = acc + nbr_rot[j] * z[nbr_idx[j]]
            mag = abs(acc)
            if mag > 1e-300:
                acc = acc / mag
            else:
                acc = z[f]
            z_new[f] = acc
            d = acc * np.conj(z[f])
            ang = abs(math.atan2(d.imag, d.real)) * 0.25
            if ang > max_delta:
                max_delta = ang
        z, z_new = z_new, z
        used = it + 1
        if max_delta < tol:
            break
    return z, used, max_delta


def field_sweeps_numpy(z, nbr_off, nbr_idx, nbr_rot, free, lam, iters, tol):
    """Pure-numpy twin of the damped Jacobi field smoother."""
    z = z.copy()
    counts = np.diff(nbr_off)
    rows = np.repeat(np.arange(z.shape[0]), counts)
    used = 0
    max_delta = 0.0
    for it in range(iters):
        acc = lam * z
        np.add.at(acc, rows, nbr_rot * z[nbr_idx])
        mag = np.abs(acc)
        safe = mag > 1e-300
        z_next = np.where(safe, acc / np.where(safe, mag, 1.0), z)
        z_next = np.where(free, z_next, z)
        d = z_next * np.conj(z)
        deltas = np.abs(np.arctan2(d.imag, d.real)) * 0.25
        max_delta = float(np.max(deltas)) if deltas.size else 0.0
        z = z_next
        used = it + 1
        if max_delta < tol:
            break
    return z, used, max_delta


def field_sweeps_numba(z, nbr_off, nbr_idx, nbr_rot, free, lam, iters, tol):
    out, used, max_delta = _field_sweeps_jit(
        np.ascontiguousarray(z, dtype=np.complex128),
        np.ascontiguousarray(nbr_off, dtype=np.int64),
        np.ascontiguousarray(nbr_idx, dtype=np.int64),
        np.ascontiguousarray(nbr_rot, dtype=np.complex128),
        np.ascontiguousarray(free, dtype=np.bool_),
        float(lam), int(iters), float(tol),
    )
    return out, used, max_delta


# ---------------------------------------------------------------------------
# barycentric point location in a 2D triangulation
# ---------------------------------------------------------------------------

@njit(cache=True)
def _locate_jit(pts, tri_xy, eps):
    q = pts.shape[0]
    t = tri_xy.shape[0]
    tri_out = np.full(q, -1, dtype=np.int64)
    bary_out = np.zeros((q, 3), dtype=np.float64)
    best_score = np.full(q, -np.inf, dtype=np.float64)
    for i in range(q):
        px, py = pts[i, 0], pts[i, 1]
        for k in range(t):
            ax, ay = tri_xy[k, 0, 0], tri_xy[k, 0, 1]
            bx, by = tri_xy[k, 1, 0], tri_xy[k, 1, 1]
            cx, cy = tri_xy[k, 2, 0], tri_xy[k, 2, 1]
            det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay)
            if abs(det) < 1e-300:
                continue
            l1 = ((px - ax) * (cy - ay) - (cx - ax) * (py - ay)) / det
            l2 = ((bx - ax) * (py - ay) - (px - ax) * (by - ay)) / det
            l0 = 1.0 - l1 - l2
            score = min(l0, min(l1, l2))
            if score > best_score[i]:
                best_score[i] = score
                tri_out[i] = k
                bary_out[i, 0] = l0
                bary_out[i, 1] = l1
                bary_out[i, 2] = l2
            if score >= -eps:
                break
    return tri_out, bary_out, best_score


def locate_numpy(pts, tri_xy, eps):
    q = pts.shape[0]
    a = tri_xy[:, 0]
    b = tri_xy[:, 1]
    c = tri_xy[:, 2]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
    ok = np.abs(det) >= 1e-300
    det_safe = np.where(ok, det, 1.0)
    tri_out = np.full(q, -1, dtype=np.int64)
    bary_out = np.zeros((q, 3), dtype=np.float64)
    best_score = np.full(q, -np.inf, dtype=np.float64)
    for i in range(q):
        px, py = pts[i]
        l1 = ((px - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (py - a[:, 1])) / det_safe
        l2 = ((b[:, 0] - a[:, 0]) * (py - a[:, 1]) - (px - a[:, 0]) * (b[:, 1] - a[:, 1])) / det_safe
        l0 = 1.0 - l1 - l2
        score = np.where(ok, np.minimum(l0, np.minimum(l1, l2)), -np.inf)
        # mimic the jit early-exit: first triangle containing the point wins
        inside = np.nonzero(score >= -eps)[0]
        k = int(inside[0]) if inside.size else int(np.argmax(score))
        if score[k] > best_score[i]:
            best_score[i] = score[k]
            tri_out[i] = k
            bary_out[i] = (l0[k], l1[k], l2[k])
    return tri_out, bary_out, best_score


def locate_numba(pts, tri_xy, eps):
    return _locate_jit(
        np.ascontiguousarray(pts, dtype=np.float64),
        np.ascontiguousarray(tri_xy, dtype=np.float64),
        float(eps),
    )


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    fps_select = fps_numba
    min_sqdist_to_tris = min_sqdist_numba
    field_sweeps = field_sweeps_numba
    locate_in_triangles = locate_numba
else:
    fps_select = fps_numpy
    min_sqdist_to_tris = min_sqdist_numpy
    field_sweeps = field_sweeps_numpy
    locate_in_triangles = locate_numpy


def warmup() -> None:
    """Trigger jit compilation on tiny inputs so timed paths run hot."""
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    fps_select(pts, 2, 0)
    off = np.array([0, 1, 2, 3], dtype=np.int64)
    idx = np.array([0, 0, 0], dtype=np.int64)
    min_sqdist_to_tris(pts, pts[:1], pts[1:2], pts[2:3], off[:2], idx[:1])
    z = np.exp(4j * np.array([0.1, 0.2]))
    field_sweeps(z, np.array([0, 1, 2]), np.array([1, 0]),
                 np.ones(2, dtype=np.complex128), np.array([True, True]), 1.0, 1, 0.0)
    locate_in_triangles(np.array([[0.2, 0.2]]),
                        np.array([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]]), 1e-9)
