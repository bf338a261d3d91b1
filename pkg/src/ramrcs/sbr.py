"""Shooting-and-bouncing-rays monostatic RCS.

A uniform grid of parallel ray tubes is launched over the scene silhouette.
Each tube is traced through specular bounces; at every bounce the coating
reflection coefficients act on the TE and TM field components, and the
reflected field's physical-optics current over the tube footprint radiates
back toward the radar. Contributions are summed coherently.

Both transmit channels (H and V) share one geometric trace; fields are
carried as complex 3-vectors, one per channel.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coatings import Coating
from .core import C0, AngleGrid, DomainError, FrequencyGrid, Polarization, look_vectors, wavelength
from .geometry.scene import Hit, Ray, Scene, reflect
from .results import RcsResult

WORKERS_ENV = "RAMRCS_WORKERS"
NORMAL_INCIDENCE = 1e-9
# far-field scale; the flat-plate calibration in `calibrate_plate` pins it to 1
FAR_FIELD_SCALE = 1.0


@dataclass(frozen=True)
class SbrParams:
    max_bounces: int = 20
    ray_density: float = 5.0
    tube_cull_db: float = -60.0

    def __post_init__(self):
        if self.max_bounces < 1:
            raise DomainError("max_bounces must be >= 1")
        if self.ray_density < 1:
            raise DomainError("ray_density must be >= 1")

    @property
    def cull_amplitude(self):
        return 10.0 ** (self.tube_cull_db / 20.0)


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def polarization_basis(look_direction):
    """Horizontal and vertical unit vectors for propagation direction `look_direction`."""
    d = np.asarray(look_direction, dtype=float)
    r = -d
    h = np.cross([0.0, 0.0, 1.0], r)
    if np.linalg.norm(h) < 1e-12:
        h = np.cross([1.0, 0.0, 0.0], r)
    h = h / np.linalg.norm(h)
    return h, np.cross(r, h)


@dataclass(frozen=True, eq=False)
class RayTube:
    """One traced tube for a single transmit channel.

    `field` is the complex field vector (unit incident amplitude); `basis` is
    the TE unit vector of the last interaction, so `amp` gives the (TE, TM)
    components in that local frame.
    """

    ray: Ray
    field: np.ndarray
    phase_path_m: float
    bounces: int
    tube_area_m2: float
    basis: np.ndarray
    edges: tuple = ()

    @property
    def amp(self):
        d = np.asarray(self.ray.direction)
        e_te = np.asarray(self.basis)
        e_tm = np.cross(e_te, d)
        return complex(self.field @ e_te), complex(self.field @ e_tm)

    @property
    def magnitude(self):
        return float(np.linalg.norm(self.field))


@dataclass(eq=False)
class TubeBundle:
    """Struct-of-arrays tube set; `field` has shape (n, channels, 3)."""

    origin: np.ndarray
    direction: np.ndarray
    field: np.ndarray
    path: np.ndarray
    bounces: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    eref: np.ndarray
    area: float
    ref_point: np.ndarray
    look: np.ndarray
    pol_vectors: np.ndarray
    spacing: tuple = (0.0, 0.0)

    def __len__(self):
        return len(self.origin)

    def __getitem__(self, i):
        return self.tube(i)

    def __iter__(self):
        return (self.tube(i) for i in range(len(self)))

    def tube(self, i, channel=0):
        return RayTube(
            ray=Ray(tuple(self.origin[i]), tuple(self.direction[i])),
            field=self.field[i, channel].copy(),
            phase_path_m=float(self.path[i]),
            bounces=int(self.bounces[i]),
            tube_area_m2=self.area,
            basis=self.eref[i].copy(),
            edges=(self.du[i].copy(), self.dv[i].copy()),
        )

    def subset(self, mask):
        return TubeBundle(
            self.origin[mask], self.direction[mask], self.field[mask], self.path[mask],
            self.bounces[mask], self.du[mask], self.dv[mask], self.eref[mask], self.area,
            self.ref_point, self.look, self.pol_vectors, self.spacing,
        )


@dataclass(eq=False)
class Interactions:
    """Surface hits of one bounce generation, ready for far-field summation."""

    point: np.ndarray
    normal: np.ndarray
    d_in: np.ndarray
    d_out: np.ndarray
    field_out: np.ndarray
    path: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    ref_point: np.ndarray
    tube: np.ndarray

    def __len__(self):
        return len(self.point)


@dataclass
class TraceStats:
    launched: int = 0
    interactions: int = 0
    exited: int = 0
    culled: int = 0
    truncated: int = 0
    residual_percent: float = 0.0
    max_bounce_reached: int = 0


def launch_rays(scene: Scene, look_direction, f, params: SbrParams = SbrParams()):
    """Tubes on a grid over the scene silhouette, keeping only those that hit.

    Spacing is at most lambda / ray_density and is shrunk so the cells tile
    the projected bounding box exactly. Phase is referenced to the plane
    through the bounding-box centre normal to `look_direction`.
    """
    d0 = np.asarray(look_direction, dtype=float)
    if abs(np.linalg.norm(d0) - 1.0) > 1e-9:
        raise DomainError("look direction must be a unit vector")
    lam = wavelength(f)
    h, v = polarization_basis(d0)
    lo, hi = scene.bounds
    center = 0.5 * (lo + hi)
    corners = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    rel = corners - center
    s_proj, t_proj = rel @ h, rel @ v
    s0, s1 = s_proj.min(), s_proj.max()
    t0, t1 = t_proj.min(), t_proj.max()
    target = lam / params.ray_density
    ns = max(1, math.ceil((s1 - s0) / target - 1e-9))
    nt = max(1, math.ceil((t1 - t0) / target - 1e-9))
    ds, dt = (s1 - s0) / ns, (t1 - t0) / nt
    empty = _empty_bundle(center, d0, h, v, ds, dt)
    if len(scene.items) == 0 or ds <= 0 or dt <= 0:
        return empty
    sc = s0 + ds * (np.arange(ns) + 0.5)
    tc = t0 + dt * (np.arange(nt) + 0.5)
    S, T = np.meshgrid(sc, tc, indexing="ij")
    S, T = S.ravel(), T.ravel()
    back = scene.size + 1.0
    origin = center + S[:, None] * h + T[:, None] * v - back * d0
    dirs = np.broadcast_to(d0, origin.shape).copy()
    _, item, _ = scene.intersect_many(origin, dirs)
    keep = item >= 0
    n = int(keep.sum())
    if n == 0:
        return empty
    fld = np.zeros((n, 2, 3), dtype=complex)
    fld[:, 0] = h
    fld[:, 1] = v
    return TubeBundle(
        origin=origin[keep],
        direction=dirs[keep],
        field=fld,
        path=np.full(n, -back),
        bounces=np.zeros(n, dtype=np.int64),
        du=np.broadcast_to(ds * h, (n, 3)).copy(),
        dv=np.broadcast_to(dt * v, (n, 3)).copy(),
        eref=np.broadcast_to(h, (n, 3)).copy(),
        area=ds * dt,
        ref_point=center,
        look=d0,
        pol_vectors=np.array([h, v]),
        spacing=(ds, dt),
    )


def _empty_bundle(center, d0, h, v, ds, dt):
    z3 = np.zeros((0, 3))
    return TubeBundle(z3, z3.copy(), np.zeros((0, 2, 3), complex), np.zeros(0), np.zeros(0, np.int64),
                      z3.copy(), z3.copy(), z3.copy(), ds * dt, center, d0, np.array([h, v]), (ds, dt))


def _reflect_fields(d, n, E, eref, gte, gtm):
    """Apply (Gamma_TE, Gamma_TM) at hits with normals `n` facing the rays.

    Returns (d_out, E_out, e_te). The TM unit vectors are chosen so their
    tangential parts agree on both sides, so Gamma_TM acts on the tangential
    field like the transmission-line coefficient does.
    """
    cosi = -_dot(d, n)
    d_out = d + 2.0 * cosi[:, None] * n
    e_te = np.cross(d, n)
    s = np.linalg.norm(e_te, axis=1)
    flat = s < NORMAL_INCIDENCE
    if flat.any():
        # plane of incidence undefined: carry the previous basis forward
        alt = eref[flat] - _dot(eref[flat], d[flat])[:, None] * d[flat]
        e_te[flat] = alt
        s[flat] = np.linalg.norm(alt, axis=1)
    e_te = e_te / s[:, None]
    e_tm_in = np.cross(e_te, d)
    e_tm_out = np.cross(d_out, e_te)
    a_te = np.einsum("nck,nk->nc", E, e_te)
    a_tm = np.einsum("nck,nk->nc", E, e_tm_in)
    E_out = (gte[:, None] * a_te)[..., None] * e_te[:, None, :] + (gtm[:, None] * a_tm)[..., None] * e_tm_out[:, None, :]
    return d_out, E_out, e_te


def _coating_gammas(scene: Scene, item, f, cosi):
    gte = np.empty(len(item), dtype=complex)
    gtm = np.empty(len(item), dtype=complex)
    surf = scene.items.surface[item]
    for si in np.unique(surf):
        m = surf == si
        a, b = scene.surfaces[si].coating.gamma(f, cosi[m])
        gte[m] = a
        gtm[m] = b
    return gte, gtm


def bounce(tube: RayTube, hit: Hit, coating: Coating, f) -> RayTube:
    """Reflect one tube at `hit` through `coating` (planar-tube approximation)."""
    d = np.asarray(tube.ray.direction, dtype=float)[None]
    n = np.asarray(hit.normal, dtype=float)[None]
    if float(_dot(d, n)[0]) > 0:
        n = -n
    cosi = -_dot(d, n)
    gte, gtm = coating.gamma(f, cosi)
    E = np.asarray(tube.field, dtype=complex)[None, None]
    d_out, E_out, e_te = _reflect_fields(d, n, E, np.asarray(tube.basis, float)[None], gte, gtm)
    edges = tuple(reflect(e, n[0]) for e in tube.edges)
    return RayTube(
        ray=Ray(hit.point, tuple(_unit(d_out[0]))),
        field=E_out[0, 0],
        phase_path_m=tube.phase_path_m + hit.t,
        bounces=tube.bounces + 1,
        tube_area_m2=tube.tube_area_m2,
        basis=e_te[0],
        edges=edges,
    )


def trace(scene: Scene, tubes: TubeBundle, f, params: SbrParams = SbrParams()):
    """Bounce every tube through the scene; return (interaction batches, stats)."""
    stats = TraceStats(launched=len(tubes))
    batches = []
    if len(tubes) == 0:
        return batches, stats
    tmin = 1e-9 * max(scene.size, 1.0)
    planar = scene.planar_items
    cull = params.cull_amplitude
    o, d, E = tubes.origin, tubes.direction, tubes.field
    path, du, dv, eref = tubes.path, tubes.du, tubes.dv, tubes.eref
    ids = np.arange(len(o))
    skip = np.full(len(o), -1, dtype=np.int64)
    for b in range(params.max_bounces):
        t, item, n = scene.intersect_many(o, d, tmin, np.inf, skip)
        hit = item >= 0
        stats.exited += int((~hit).sum())
        if not hit.all():
            o, d, E, path, du, dv, eref, ids = (x[hit] for x in (o, d, E, path, du, dv, eref, ids))
            t, item, n = t[hit], item[hit], n[hit]
        if len(o) == 0:
            break
        stats.max_bounce_reached = b + 1
        p = o + t[:, None] * d
        path = path + t
        cosi = -_dot(d, n)
        gte, gtm = _coating_gammas(scene, item, f, cosi)
        d_out, E_out, e_te = _reflect_fields(d, n, E, eref, gte, gtm)
        batches.append(Interactions(p, n, d, d_out, E_out, path, du, dv, tubes.ref_point, ids))
        stats.interactions += len(p)
        du, dv, eref = reflect(du, n), reflect(dv, n), reflect(e_te, n)
        o, d, E = p, d_out, E_out
        skip = np.where(planar[item], item, -1)
        alive = np.abs(E).max(axis=(1, 2)) >= cull
        stats.culled += int((~alive).sum())
        if not alive.all():
            o, d, E, path, du, dv, eref, skip, ids = (
                x[alive] for x in (o, d, E, path, du, dv, eref, skip, ids)
            )
    if len(o):
        stats.truncated = len(o)
        power = np.sum(np.abs(E) ** 2) / max(1, E.shape[1])
        stats.residual_percent = 100.0 * float(power) / stats.launched
    return batches, stats


def _sinc(x):
    return np.sinc(x / np.pi)


def far_field(batches, look_direction, f, channels=None):
    """Coherent PO sum over interaction batches.

    Each hit radiates the current 2 n x H_reflected spread over its tube
    footprint on the local tangent plane. Returns complex far-field vectors of
    shape (channels, 3); project onto the receive polarization for the
    co-polarized coefficient. An empty input gives zeros.
    """
    if isinstance(batches, Interactions):
        batches = [batches]
    d0 = np.asarray(look_direction, dtype=float)
    s_hat = -d0
    k = 2.0 * np.pi * f / C0
    n_ch = channels or (batches[0].field_out.shape[1] if batches else 2)
    total = np.zeros((n_ch, 3), dtype=complex)
    for bt in batches:
        if len(bt) == 0:
            continue
        n, d = bt.normal, bt.d_in
        dn = _dot(d, n)
        up = bt.du - (_dot(bt.du, n) / dn)[:, None] * d
        vp = bt.dv - (_dot(bt.dv, n) / dn)[:, None] * d
        area = np.linalg.norm(np.cross(up, vp), axis=1)
        q = k * (s_hat - d)
        shape = area * _sinc(0.5 * _dot(q, up)) * _sinc(0.5 * _dot(q, vp))
        phase = np.exp(-1j * k * (bt.path + (bt.point - bt.ref_point) @ d0))
        # eta * J = 2 n x (d_out x E_out); keep the part transverse to s_hat
        hxe = np.cross(bt.d_out[:, None, :], bt.field_out)
        j = 2.0 * np.cross(n[:, None, :], hxe)
        j_perp = j - np.einsum("nck,k->nc", j, s_hat)[..., None] * s_hat
        w = (shape * phase)[:, None, None]
        total += np.sum(j_perp * w, axis=0)
    return FAR_FIELD_SCALE * (-1j * k / (4.0 * np.pi)) * total


def _co_pol(F, pol_vectors, pols):
    out = []
    for pol in pols:
        pol = Polarization.parse(pol)
        if pol not in (Polarization.HH, Polarization.VV):
            raise DomainError("scene sweeps take HH or VV")
        c = 0 if pol is Polarization.HH else 1
        out.append(F[c] @ pol_vectors[c])
    return np.array(out)


def scattered_cell(scene, theta_deg, phi_deg, f, pols, params):
    """Co-polarized far-field coefficients and stats for one (f, angle) cell."""
    r, _, _ = look_vectors(theta_deg, phi_deg)
    d0 = -r
    tubes = launch_rays(scene, d0, f, params)
    batches, stats = trace(scene, tubes, f, params)
    F = far_field(batches, d0, f, channels=2)
    return _co_pol(F, tubes.pol_vectors, pols), stats


def resolve_workers(workers=None):
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def monostatic_sweep(scene: Scene, angle_grid: AngleGrid, freq_grid: FrequencyGrid,
                     pols=(Polarization.HH, Polarization.VV), params: SbrParams = SbrParams(),
                     workers=None) -> RcsResult:
    """Monostatic RCS over every (frequency, azimuth) cell.

    Cells are independent and written back by index, so the output does not
    depend on the worker count.
    """
    pols = tuple(Polarization.parse(p) for p in ([pols] if isinstance(pols, (str, Polarization)) else pols))
    for p in pols:
        if p not in (Polarization.HH, Polarization.VV):
            raise DomainError("scene sweeps take HH or VV")
    freqs = freq_grid.array if isinstance(freq_grid, FrequencyGrid) else np.atleast_1d(freq_grid)
    cells = [(i, j, f, phi) for i, f in enumerate(freqs) for j, phi in enumerate(angle_grid.phi_points_deg)]

    def run(cell):
        i, j, f, phi = cell
        return scattered_cell(scene, angle_grid.theta_deg, phi, f, pols, params)

    n_workers = resolve_workers(workers)
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            out = list(pool.map(run, cells))
    else:
        out = [run(c) for c in cells]
    field_arr = np.zeros((len(freqs), len(angle_grid), len(pols)), dtype=complex)
    residual = np.zeros((len(freqs), len(angle_grid)))
    for (i, j, _, _), (vals, stats) in zip(cells, out):
        field_arr[i, j] = vals
        residual[i, j] = stats.residual_percent
    diag = {
        "max_residual_percent": float(residual.max()) if residual.size else 0.0,
        "params": params,
    }
    return RcsResult(freqs, angle_grid.theta_deg, angle_grid.array, pols, field_arr, diag)


def calibrate_plate(freqs=(5e9, 10e9, 15e9), a=0.3, b=0.3, params: SbrParams = SbrParams()):
    """Ratio of the analytic PO plate peak to the SBR peak at each frequency.

    A frequency-independent ratio of 1 confirms `FAR_FIELD_SCALE`.
    """
    from .geometry.scene import make_plate

    scene = make_plate(a, b)
    out = {}
    for f in freqs:
        vals, _ = scattered_cell(scene, 0.0, 0.0, f, (Polarization.VV,), params)
        sigma_sbr = 4 * np.pi * abs(vals[0]) ** 2
        sigma_po = 4 * np.pi * (a * b) ** 2 / wavelength(f) ** 2
        out[float(f)] = sigma_po / sigma_sbr
    return out
