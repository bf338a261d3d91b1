"""Analytic primitives and triangle meshes, packed into kernel item rows."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import DomainError
from . import kernels as K


def _unit(v, what="vector"):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not n > 0:
        raise DomainError(f"{what} must be non-zero")
    return v / n


def _vec(v):
    return tuple(float(x) for x in v)


def _row(*parts):
    row = np.zeros(9)
    flat = np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in parts])
    row[: len(flat)] = flat
    return row


def _disc_bounds(center, normal, radius):
    # extent of a circle along axis k is r * sqrt(1 - n_k^2)
    ext = radius * np.sqrt(np.clip(1.0 - np.asarray(normal) ** 2, 0.0, None))
    c = np.asarray(center)
    return c - ext, c + ext


@dataclass(frozen=True)
class Plate:
    """Rectangle of edges `a` x `b`; edge `a` runs along up x normal."""

    a: float
    b: float
    center: tuple = (0.0, 0.0, 0.0)
    normal: tuple = (1.0, 0.0, 0.0)
    up: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError("plate edges must be positive")
        n = _unit(self.normal, "plate normal")
        ea = np.cross(_unit(self.up, "plate up"), n)
        if np.linalg.norm(ea) < 1e-12:
            raise DomainError("plate up vector is parallel to its normal")
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "normal", _vec(n))

    @property
    def edge_vectors(self):
        n = np.asarray(self.normal)
        ea = _unit(np.cross(_unit(self.up), n))
        eb = np.cross(n, ea)
        return ea, eb

    @property
    def area(self):
        return self.a * self.b

    def items(self):
        ea, eb = self.edge_vectors
        ha, hb = 0.5 * self.a * ea, 0.5 * self.b * eb
        c = np.asarray(self.center)
        corners = np.array([c + sa * ha + sb * hb for sa in (-1, 1) for sb in (-1, 1)])
        return [(K.PLATE, _row(c, ha, hb), corners.min(axis=0), corners.max(axis=0))]


@dataclass(frozen=True)
class Disc:
    diameter: float
    center: tuple = (0.0, 0.0, 0.0)
    normal: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.diameter > 0:
            raise DomainError("disc diameter must be positive")
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "normal", _vec(_unit(self.normal, "disc normal")))

    def items(self):
        r = 0.5 * self.diameter
        lo, hi = _disc_bounds(self.center, self.normal, r)
        return [(K.DISC, _row(self.center, self.normal, r), lo, hi)]


@dataclass(frozen=True)
class Cylinder:
    """Open two-sided tube from `base` along `axis`; caps are optional discs."""

    diameter: float
    length: float
    base: tuple = (0.0, 0.0, 0.0)
    axis: tuple = (1.0, 0.0, 0.0)
    cap_start: bool = False
    cap_end: bool = False

    def __post_init__(self):
        if not (self.diameter > 0 and self.length > 0):
            raise DomainError("cylinder diameter and length must be positive")
        object.__setattr__(self, "base", _vec(self.base))
        object.__setattr__(self, "axis", _vec(_unit(self.axis, "cylinder axis")))

    def items(self):
        r = 0.5 * self.diameter
        a = np.asarray(self.axis)
        b0 = np.asarray(self.base)
        b1 = b0 + self.length * a
        lo0, hi0 = _disc_bounds(b0, a, r)
        lo1, hi1 = _disc_bounds(b1, a, r)
        out = [(K.CYL, _row(b0, a, r, self.length), np.minimum(lo0, lo1), np.maximum(hi0, hi1))]
        if self.cap_start:
            out += Disc(self.diameter, b0, a).items()
        if self.cap_end:
            out += Disc(self.diameter, b1, a).items()
        return out


@dataclass(frozen=True)
class Sphere:
    radius: float
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("sphere radius must be positive")
        object.__setattr__(self, "center", _vec(self.center))

    def items(self):
        c = np.asarray(self.center)
        return [(K.SPH, _row(c, self.radius), c - self.radius, c + self.radius)]


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Indexed triangle mesh in metres. `n_dropped` counts degenerate faces removed at import."""

    vertices: np.ndarray
    triangles: np.ndarray
    n_dropped: int = field(default=0)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float).reshape(-1, 3)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise DomainError("triangle indices out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    def __eq__(self, other):
        if not isinstance(other, TriMesh):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and self.n_dropped == other.n_dropped
        )

    __hash__ = None

    @property
    def corners(self):
        return self.vertices[self.triangles]

    @property
    def normals(self):
        c = self.corners
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    @property
    def areas(self):
        c = self.corners
        return 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)

    def transformed(self, scale=1.0, offset=(0.0, 0.0, 0.0)):
        return TriMesh(self.vertices * scale + np.asarray(offset, float), self.triangles, self.n_dropped)

    def items(self):
        c = self.corners
        rows = c.reshape(-1, 9)
        return [(K.TRI, rows, c.min(axis=1), c.max(axis=1))]
