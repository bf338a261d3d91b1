"""Scenes: coated surfaces, their BVH, and ray queries."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Union

import numpy as np

from ..coatings import PEC, Coating
from ..core import DomainError
from . import kernels as K
from .bvh import BVH, build_bvh_arrays
from .shapes import Cylinder, Disc, Plate, Sphere, TriMesh

Shape = Union[Plate, Disc, Cylinder, Sphere, TriMesh]


@dataclass(frozen=True)
class Surface:
    shape: Shape
    coating: Coating = PEC
    id: str = ""


@dataclass(frozen=True)
class Ray:
    origin: tuple
    direction: tuple
    min_t: float = 0.0
    max_t: float = np.inf

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise DomainError("ray direction must be a unit vector")
        if not self.min_t < self.max_t:
            raise DomainError("ray clip range is empty")
        object.__setattr__(self, "origin", tuple(float(x) for x in self.origin))
        object.__setattr__(self, "direction", tuple(float(x) for x in d))


@dataclass(frozen=True)
class Hit:
    t: float
    point: tuple
    normal: tuple
    surface_id: str
    item: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class CompiledItems:
    kinds: np.ndarray
    params: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    surface: np.ndarray

    def __len__(self):
        return len(self.kinds)


def reflect(d, n):
    """Mirror direction(s) `d` about unit normal(s) `n`."""
    d = np.asarray(d, dtype=float)
    n = np.asarray(n, dtype=float)
    return d - 2.0 * np.sum(d * n, axis=-1, keepdims=True) * n


@dataclass(frozen=True, eq=False)
class Scene:
    surfaces: tuple[Surface, ...]
    bvh: BVH | None = None

    def __post_init__(self):
        surfaces = tuple(self.surfaces)
        named = []
        for i, s in enumerate(surfaces):
            named.append(s if s.id else replace(s, id=f"s{i}"))
        ids = [s.id for s in named]
        if len(set(ids)) != len(ids):
            raise DomainError("surface ids must be unique")
        object.__setattr__(self, "surfaces", tuple(named))

    @cached_property
    def items(self) -> CompiledItems:
        kinds, params, lo, hi, surf = [], [], [], [], []
        for si, s in enumerate(self.surfaces):
            for kind, rows, ilo, ihi in s.shape.items():
                rows = np.atleast_2d(rows)
                kinds.append(np.full(len(rows), kind, dtype=np.int64))
                params.append(rows)
                lo.append(np.atleast_2d(ilo))
                hi.append(np.atleast_2d(ihi))
                surf.append(np.full(len(rows), si, dtype=np.int64))
        if not kinds:
            z = np.zeros((0, 3))
            return CompiledItems(np.zeros(0, np.int64), np.zeros((0, 9)), z, z.copy(), np.zeros(0, np.int64))
        return CompiledItems(
            kinds=np.concatenate(kinds),
            params=np.ascontiguousarray(np.concatenate(params)),
            lo=np.concatenate(lo),
            hi=np.concatenate(hi),
            surface=np.concatenate(surf),
        )

    @property
    def bounds(self):
        it = self.items
        if len(it) == 0:
            return np.zeros(3), np.zeros(3)
        return it.lo.min(axis=0), it.hi.max(axis=0)

    @property
    def size(self):
        lo, hi = self.bounds
        return float(np.linalg.norm(hi - lo))

    @cached_property
    def planar_items(self):
        return np.isin(self.items.kinds, K.PLANAR)

    def surface_index(self, surface_id):
        for i, s in enumerate(self.surfaces):
            if s.id == surface_id:
                return i
        raise KeyError(surface_id)

    def index(self) -> BVH:
        """The scene's BVH, built on first use when `build_bvh` was not called."""
        if self.bvh is not None:
            return self.bvh
        return self._lazy_bvh

    @cached_property
    def _lazy_bvh(self):
        return build_bvh_arrays(self.items.lo, self.items.hi)

    def intersect_many(self, origins, dirs, tmin=0.0, tmax=np.inf, skip=None, exhaustive=False):
        """Nearest hits for arrays of rays.

        Returns (t, item, normal); misses have item -1 and t = inf.
        """
        origins = np.ascontiguousarray(origins, dtype=float).reshape(-1, 3)
        dirs = np.ascontiguousarray(dirs, dtype=float).reshape(-1, 3)
        n = len(origins)
        tmin = np.ascontiguousarray(np.broadcast_to(tmin, (n,)), dtype=float)
        tmax = np.ascontiguousarray(np.broadcast_to(tmax, (n,)), dtype=float)
        skip = np.full(n, -1, dtype=np.int64) if skip is None else np.ascontiguousarray(skip, dtype=np.int64)
        out_t = np.empty(n)
        out_item = np.empty(n, dtype=np.int64)
        out_n = np.zeros((n, 3))
        it = self.items
        if len(it) == 0:
            out_t[:] = np.inf
            out_item[:] = -1
            return out_t, out_item, out_n
        if exhaustive:
            K.trace_all(origins, dirs, tmin, tmax, skip, it.kinds, it.params, out_t, out_item, out_n)
        else:
            b = self.index()
            K.trace_bvh(origins, dirs, tmin, tmax, skip, b.node_lo, b.node_hi, b.node_left, b.node_right,
                        b.node_start, b.node_count, b.order, it.kinds, it.params, out_t, out_item, out_n)
        return out_t, out_item, out_n


def build_bvh(scene: Scene) -> Scene:
    """Return a copy of `scene` carrying its acceleration index."""
    if scene.bvh is not None:
        return scene
    if len(scene.items) == 0:
        raise DomainError("cannot index an empty scene")
    return Scene(scene.surfaces, bvh=build_bvh_arrays(scene.items.lo, scene.items.hi))


def intersect(scene: Scene, ray: Ray):
    """Nearest `Hit` of `ray` with `scene`, or None on a miss."""
    t, item, n = scene.intersect_many(
        np.asarray([ray.origin]), np.asarray([ray.direction]), ray.min_t, ray.max_t
    )
    if item[0] < 0:
        return None
    p = np.asarray(ray.origin) + t[0] * np.asarray(ray.direction)
    sid = scene.surfaces[scene.items.surface[item[0]]].id
    return Hit(float(t[0]), tuple(p.tolist()), tuple(n[0].tolist()), sid, int(item[0]))


def make_duct(diameter_m, length_m, wall_coating: Coating = PEC, termination_coating: Coating = PEC):
    """Circular intake: open aperture at x = 0, wall along +x, flat disc at x = length.

    The disc stands in for the engine face. Radar azimuth 180 deg looks
    straight down the axis.
    """
    if not (diameter_m > 0 and length_m > 0):
        raise DomainError("duct diameter and length must be positive")
    wall = Surface(Cylinder(diameter_m, length_m), wall_coating, "wall")
    term = Surface(Disc(diameter_m, center=(length_m, 0.0, 0.0), normal=(-1.0, 0.0, 0.0)),
                   termination_coating, "termination")
    return build_bvh(Scene((wall, term)))


def make_plate(a_m, b_m, coating: Coating = PEC):
    """Plate in the y-z plane facing +x (azimuth 0); edge `a_m` along y."""
    return build_bvh(Scene((Surface(Plate(a_m, b_m), coating, "plate"),)))


def make_sphere(radius_m, coating: Coating = PEC):
    return build_bvh(Scene((Surface(Sphere(radius_m), coating, "sphere"),)))
