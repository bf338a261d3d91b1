"""Compiled ray/primitive intersection and BVH traversal.

Every primitive is packed as a type code plus a row of up to 9 floats:

    TRI   v0, v1, v2
    PLATE center, half_edge_a, half_edge_b   (rectangle, edges orthogonal)
    DISC  center, normal, radius
    CYL   base_center, unit_axis, radius, length   (open, two-sided wall)
    SPH   center, radius

Returned normals face the incoming ray. Hits with |d.n| below GRAZING are
treated as misses.
"""
import math

import numpy as np
from numba import njit

TRI, PLATE, DISC, CYL, SPH = 0, 1, 2, 3, 4
PLANAR = (TRI, PLATE, DISC)
GRAZING = 1e-9
STACK_SIZE = 256

_MISS = (math.inf, 0.0, 0.0, 0.0)


@njit(cache=True, nogil=True)
def _oriented(t, dx, dy, dz, nx, ny, nz):
    if dx * nx + dy * ny + dz * nz > 0.0:
        return t, -nx, -ny, -nz
    return t, nx, ny, nz


@njit(cache=True, nogil=True)
def _hit_tri(o, d, p, tmin, tmax):
    # watertight test: shear into ray space, then signed edge functions
    ax = np.abs(d)
    kz = 0
    if ax[1] > ax[kz]:
        kz = 1
    if ax[2] > ax[kz]:
        kz = 2
    kx = (kz + 1) % 3
    ky = (kx + 1) % 3
    if d[kz] < 0.0:
        kx, ky = ky, kx
    sx = d[kx] / d[kz]
    sy = d[ky] / d[kz]
    sz = 1.0 / d[kz]
    a0 = p[0] - o[0]
    a1 = p[1] - o[1]
    a2 = p[2] - o[2]
    b0 = p[3] - o[0]
    b1 = p[4] - o[1]
    b2 = p[5] - o[2]
    c0 = p[6] - o[0]
    c1 = p[7] - o[1]
    c2 = p[8] - o[2]
    av = (a0, a1, a2)
    bv = (b0, b1, b2)
    cv = (c0, c1, c2)
    axs = av[kx] - sx * av[kz]
    ays = av[ky] - sy * av[kz]
    bxs = bv[kx] - sx * bv[kz]
    bys = bv[ky] - sy * bv[kz]
    cxs = cv[kx] - sx * cv[kz]
    cys = cv[ky] - sy * cv[kz]
    u = cxs * bys - cys * bxs
    v = axs * cys - ays * cxs
    w = bxs * ays - bys * axs
    if (u < 0.0 or v < 0.0 or w < 0.0) and (u > 0.0 or v > 0.0 or w > 0.0):
        return _MISS
    det = u + v + w
    if det == 0.0:
        return _MISS
    tt = u * (sz * av[kz]) + v * (sz * bv[kz]) + w * (sz * cv[kz])
    t = tt / det
    if not (t > tmin and t < tmax):
        return _MISS
    e1x, e1y, e1z = b0 - a0, b1 - a1, b2 - a2
    e2x, e2y, e2z = c0 - a0, c1 - a1, c2 - a2
    nx = e1y * e2z - e1z * e2y
    ny = e1z * e2x - e1x * e2z
    nz = e1x * e2y - e1y * e2x
    nn = math.sqrt(nx * nx + ny * ny + nz * nz)
    if nn == 0.0:
        return _MISS
    nx /= nn
    ny /= nn
    nz /= nn
    if abs(d[0] * nx + d[1] * ny + d[2] * nz) < GRAZING:
        return _MISS
    return _oriented(t, d[0], d[1], d[2], nx, ny, nz)


@njit(cache=True, nogil=True)
def _hit_plane(o, d, cx, cy, cz, nx, ny, nz, tmin, tmax):
    den = d[0] * nx + d[1] * ny + d[2] * nz
    if abs(den) < GRAZING:
        return math.inf
    t = ((cx - o[0]) * nx + (cy - o[1]) * ny + (cz - o[2]) * nz) / den
    if not (t > tmin and t < tmax):
        return math.inf
    return t


@njit(cache=True, nogil=True)
def _hit_plate(o, d, p, tmin, tmax):
    ax, ay, az = p[3], p[4], p[5]
    bx, by, bz = p[6], p[7], p[8]
    nx = ay * bz - az * by
    ny = az * bx - ax * bz
    nz = ax * by - ay * bx
    nn = math.sqrt(nx * nx + ny * ny + nz * nz)
    nx /= nn
    ny /= nn
    nz /= nn
    t = _hit_plane(o, d, p[0], p[1], p[2], nx, ny, nz, tmin, tmax)
    if t == math.inf:
        return _MISS
    rx = o[0] + t * d[0] - p[0]
    ry = o[1] + t * d[1] - p[1]
    rz = o[2] + t * d[2] - p[2]
    sa = (rx * ax + ry * ay + rz * az) / (ax * ax + ay * ay + az * az)
    sb = (rx * bx + ry * by + rz * bz) / (bx * bx + by * by + bz * bz)
    if abs(sa) > 1.0 or abs(sb) > 1.0:
        return _MISS
    return _oriented(t, d[0], d[1], d[2], nx, ny, nz)


@njit(cache=True, nogil=True)
def _hit_disc(o, d, p, tmin, tmax):
    nx, ny, nz = p[3], p[4], p[5]
    t = _hit_plane(o, d, p[0], p[1], p[2], nx, ny, nz, tmin, tmax)
    if t == math.inf:
        return _MISS
    rx = o[0] + t * d[0] - p[0]
    ry = o[1] + t * d[1] - p[1]
    rz = o[2] + t * d[2] - p[2]
    if rx * rx + ry * ry + rz * rz > p[6] * p[6]:
        return _MISS
    return _oriented(t, d[0], d[1], d[2], nx, ny, nz)


@njit(cache=True, nogil=True)
def _quadratic_roots(a, b, c):
    disc = b * b - 4.0 * a * c
    if disc < 0.0 or a == 0.0:
        return math.inf, math.inf
    sq = math.sqrt(disc)
    q = -0.5 * (b + sq) if b >= 0.0 else -0.5 * (b - sq)
    r1 = q / a
    r2 = c / q if q != 0.0 else r1
    if r1 > r2:
        r1, r2 = r2, r1
    return r1, r2


@njit(cache=True, nogil=True)
def _hit_cyl(o, d, p, tmin, tmax):
    bx, by, bz = p[0], p[1], p[2]
    ax, ay, az = p[3], p[4], p[5]
    r = p[6]
    length = p[7]
    wx, wy, wz = o[0] - bx, o[1] - by, o[2] - bz
    da = d[0] * ax + d[1] * ay + d[2] * az
    wa = wx * ax + wy * ay + wz * az
    dpx, dpy, dpz = d[0] - da * ax, d[1] - da * ay, d[2] - da * az
    wpx, wpy, wpz = wx - wa * ax, wy - wa * ay, wz - wa * az
    qa = dpx * dpx + dpy * dpy + dpz * dpz
    if qa < 1e-300:
        return _MISS
    qb = 2.0 * (dpx * wpx + dpy * wpy + dpz * wpz)
    qc = wpx * wpx + wpy * wpy + wpz * wpz - r * r
    r1, r2 = _quadratic_roots(qa, qb, qc)
    for t in (r1, r2):
        if not (t > tmin and t < tmax):
            continue
        h = wa + t * da
        if h < 0.0 or h > length:
            continue
        nx = (wpx + t * dpx) / r
        ny = (wpy + t * dpy) / r
        nz = (wpz + t * dpz) / r
        nn = math.sqrt(nx * nx + ny * ny + nz * nz)
        nx /= nn
        ny /= nn
        nz /= nn
        if abs(d[0] * nx + d[1] * ny + d[2] * nz) < GRAZING:
            continue
        return _oriented(t, d[0], d[1], d[2], nx, ny, nz)
    return _MISS


@njit(cache=True, nogil=True)
def _hit_sph(o, d, p, tmin, tmax):
    r = p[3]
    wx, wy, wz = o[0] - p[0], o[1] - p[1], o[2] - p[2]
    qb = 2.0 * (wx * d[0] + wy * d[1] + wz * d[2])
    qc = wx * wx + wy * wy + wz * wz - r * r
    qa = d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
    r1, r2 = _quadratic_roots(qa, qb, qc)
    for t in (r1, r2):
        if not (t > tmin and t < tmax):
            continue
        nx = (wx + t * d[0]) / r
        ny = (wy + t * d[1]) / r
        nz = (wz + t * d[2]) / r
        if abs(d[0] * nx + d[1] * ny + d[2] * nz) < GRAZING:
            continue
        return _oriented(t, d[0], d[1], d[2], nx, ny, nz)
    return _MISS


@njit(cache=True, nogil=True)
def hit_item(kind, o, d, p, tmin, tmax):
    if kind == TRI:
        return _hit_tri(o, d, p, tmin, tmax)
    if kind == PLATE:
        return _hit_plate(o, d, p, tmin, tmax)
    if kind == DISC:
        return _hit_disc(o, d, p, tmin, tmax)
    if kind == CYL:
        return _hit_cyl(o, d, p, tmin, tmax)
    return _hit_sph(o, d, p, tmin, tmax)


@njit(cache=True, nogil=True)
def _slab(o, inv, lo, hi, tmin, tmax):
    t0 = tmin
    t1 = tmax
    for k in range(3):
        if inv[k] == math.inf or inv[k] == -math.inf:
            if o[k] < lo[k] or o[k] > hi[k]:
                return math.inf
            continue
        a = (lo[k] - o[k]) * inv[k]
        b = (hi[k] - o[k]) * inv[k]
        if a > b:
            a, b = b, a
        if a > t0:
            t0 = a
        if b < t1:
            t1 = b
        if t0 > t1:
            return math.inf
    return t0


@njit(cache=True, nogil=True)
def trace_bvh(origins, dirs, tmin, tmax, skip, node_lo, node_hi, node_left, node_right,
              node_start, node_count, order, kinds, params, out_t, out_item, out_n):
    """Nearest hit for every ray. `skip[i]` names an item ray i must ignore."""
    stack = np.empty(STACK_SIZE, dtype=np.int64)
    inv = np.empty(3)
    for i in range(origins.shape[0]):
        o = origins[i]
        d = dirs[i]
        for k in range(3):
            inv[k] = 1.0 / d[k] if d[k] != 0.0 else math.inf
        best = tmax[i]
        best_item = -1
        bn0 = 0.0
        bn1 = 0.0
        bn2 = 0.0
        sp = 0
        if _slab(o, inv, node_lo[0], node_hi[0], tmin[i], best) != math.inf:
            stack[0] = 0
            sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if _slab(o, inv, node_lo[node], node_hi[node], tmin[i], best) == math.inf:
                continue
            cnt = node_count[node]
            if cnt > 0:
                s = node_start[node]
                for k in range(s, s + cnt):
                    item = order[k]
                    if item == skip[i]:
                        continue
                    t, nx, ny, nz = hit_item(kinds[item], o, d, params[item], tmin[i], best)
                    if t < best:
                        best = t
                        best_item = item
                        bn0, bn1, bn2 = nx, ny, nz
            else:
                left = node_left[node]
                right = node_right[node]
                tl = _slab(o, inv, node_lo[left], node_hi[left], tmin[i], best)
                tr = _slab(o, inv, node_lo[right], node_hi[right], tmin[i], best)
                # nearer child is pushed last so it is popped first
                if tl <= tr:
                    if tr != math.inf:
                        stack[sp] = right
                        sp += 1
                    if tl != math.inf:
                        stack[sp] = left
                        sp += 1
                else:
                    if tl != math.inf:
                        stack[sp] = left
                        sp += 1
                    if tr != math.inf:
                        stack[sp] = right
                        sp += 1
        out_item[i] = best_item
        out_t[i] = best if best_item >= 0 else math.inf
        out_n[i, 0] = bn0
        out_n[i, 1] = bn1
        out_n[i, 2] = bn2


@njit(cache=True, nogil=True)
def trace_all(origins, dirs, tmin, tmax, skip, kinds, params, out_t, out_item, out_n):
    """Exhaustive nearest hit over every item, no acceleration structure."""
    for i in range(origins.shape[0]):
        best = tmax[i]
        best_item = -1
        for item in range(kinds.shape[0]):
            if item == skip[i]:
                continue
            t, nx, ny, nz = hit_item(kinds[item], origins[i], dirs[i], params[item], tmin[i], best)
            if t < best:
                best = t
                best_item = item
                out_n[i, 0] = nx
                out_n[i, 1] = ny
                out_n[i, 2] = nz
        out_item[i] = best_item
        out_t[i] = best if best_item >= 0 else math.inf
