"""Physical constants, sweep grids and polarization tags shared by the solvers.

All public APIs take angles in degrees and frequencies in Hz. The time
convention is exp(+jwt) throughout, so lossy media have eps = eps'(1 - j tan_d)
and outgoing waves carry exp(-jkr).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as _sc

C0 = _sc.c
MU0 = _sc.mu_0
EPS0 = _sc.epsilon_0
ETA0 = math.sqrt(MU0 / EPS0)

# sigma values at or below this are reported as the floor marker
FLOOR_DBSM = -120.0


class DomainError(ValueError):
    """Argument outside the domain of a physical operation."""


def wavelength(f):
    """Free-space wavelength in metres for frequency `f` in Hz."""
    f_arr = np.asarray(f, dtype=float)
    if np.any(~(f_arr > 0)):
        raise DomainError(f"frequency must be positive, got {f!r}")
    lam = C0 / f_arr
    return float(lam) if lam.ndim == 0 else lam


def to_dbsm(sigma):
    """Convert an area in m^2 to dBsm. Non-positive input is rejected."""
    s = np.asarray(sigma, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    out = 10.0 * np.log10(s)
    return float(out) if out.ndim == 0 else out


def to_dbsm_floored(sigma, floor=FLOOR_DBSM):
    """Like `to_dbsm` but clamps non-positive or tiny areas to `floor`."""
    s = np.asarray(sigma, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(s > 0, 10.0 * np.log10(np.where(s > 0, s, 1.0)), floor)
    out = np.maximum(out, floor)
    return float(out) if out.ndim == 0 else out


def _uniform_points(start, stop, step, what):
    if step <= 0:
        raise DomainError(f"{what} step must be positive")
    if stop < start:
        raise DomainError(f"{what} stop must not be below start")
    n = int(round((stop - start) / step)) + 1
    return tuple(float(x) for x in start + step * np.arange(n))


@dataclass(frozen=True)
class FrequencyGrid:
    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise DomainError("frequency grid is empty")
        if any(p <= 0 for p in pts):
            raise DomainError("frequencies must be positive")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise DomainError("frequencies must be strictly increasing")

    @classmethod
    def from_range(cls, start, stop, step):
        return cls(_uniform_points(start, stop, step, "frequency"))

    @classmethod
    def single(cls, f):
        return cls((f,))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def array(self):
        return np.asarray(self.points)


@dataclass(frozen=True)
class AngleGrid:
    """Elevation `theta_deg` plus a strictly increasing list of azimuths."""

    theta_deg: float
    phi_points_deg: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.phi_points_deg)
        object.__setattr__(self, "phi_points_deg", pts)
        object.__setattr__(self, "theta_deg", float(self.theta_deg))
        if not 0.0 <= self.theta_deg < 90.0:
            raise DomainError("theta must lie in [0, 90) degrees")
        if not pts:
            raise DomainError("azimuth grid is empty")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise DomainError("azimuths must be strictly increasing")

    @classmethod
    def from_range(cls, start, stop, step, theta_deg=0.0):
        return cls(theta_deg, _uniform_points(start, stop, step, "azimuth"))

    def __len__(self):
        return len(self.phi_points_deg)

    @property
    def array(self):
        return np.asarray(self.phi_points_deg)


class Polarization(str, enum.Enum):
    """Scene sweeps use HH/VV; planar-stack incidence uses TE/TM.

    HH carries the incident field along the horizontal unit vector of the
    sweep plane, so for an azimuth scan over a vertical plate it lies in the
    plane of incidence (TM). VV is perpendicular to it (TE).
    """

    HH = "HH"
    VV = "VV"
    TE = "TE"
    TM = "TM"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise DomainError(f"unknown polarization {value!r}") from None

    @property
    def local(self):
        """Planar TE/TM tag used when this channel meets a plate in the scan plane."""
        return {"HH": Polarization.TM, "VV": Polarization.TE}.get(self.value, self)


def look_vectors(theta_deg, phi_deg):
    """Return (radar direction, horizontal, vertical) unit vectors.

    The radar sits along r = (cos T cos p, cos T sin p, sin T). The horizontal
    polarization vector is the azimuthal unit vector, the vertical one
    completes a right-handed set with r.
    """
    t = math.radians(theta_deg)
    p = math.radians(phi_deg)
    r = np.array([math.cos(t) * math.cos(p), math.cos(t) * math.sin(p), math.sin(t)])
    h = np.array([-math.sin(p), math.cos(p), 0.0])
    v = np.cross(r, h)
    return r, h, v
