"""Closed-form physical-optics and geometric-optics RCS oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coatings import PEC, Coating
from .core import C0, AngleGrid, DomainError, FrequencyGrid, Polarization
from .results import RcsResult


@dataclass(frozen=True)
class PlateSpec:
    """Flat rectangular panel; the azimuth scan runs along edge `a_m`."""

    a_m: float
    b_m: float
    coating: Coating = PEC

    def __post_init__(self):
        if not (self.a_m > 0 and self.b_m > 0):
            raise DomainError("plate edges must be positive")

    @property
    def area(self):
        return self.a_m * self.b_m


def plate_field(plate: PlateSpec, f, scan_deg, pol):
    """Complex far-field coefficient F of the plate (sigma = 4 pi |F|^2).

    F = j Gamma (A / lambda) cos(t) sinc(k a sin t), with Gamma taken from
    the coating at the local incidence angle t. The sign matches the SBR
    solver so the two can be summed or compared coherently.
    """
    if not f > 0:
        raise DomainError("frequency must be positive")
    t = np.radians(np.asarray(scan_deg, dtype=float))
    cos_t = np.abs(np.cos(t))
    lam = C0 / f
    k = 2.0 * np.pi / lam
    x = k * plate.a_m * np.sin(t)
    shape = np.sinc(x / np.pi)
    gte, gtm = plate.coating.gamma(f, cos_t)
    g = gte if Polarization.parse(pol).local is Polarization.TE else gtm
    return 1j * g * (plate.area / lam) * cos_t * shape


def plate_rcs(plate: PlateSpec, f, phi_scan: AngleGrid, pol=(Polarization.HH, Polarization.VV)):
    """Monostatic RCS of the plate across an azimuth scan at elevation 0.

    Azimuth 0 is broadside. `f` may be a scalar or a `FrequencyGrid`.
    """
    if phi_scan.theta_deg != 0.0:
        raise DomainError("plate scans are limited to the principal plane (theta = 0)")
    pols = tuple(Polarization.parse(p) for p in ([pol] if isinstance(pol, (str, Polarization)) else pol))
    freqs = f.array if isinstance(f, FrequencyGrid) else np.atleast_1d(np.asarray(f, dtype=float))
    phis = phi_scan.array
    field = np.empty((len(freqs), len(phis), len(pols)), dtype=complex)
    for i, fi in enumerate(freqs):
        for c, p in enumerate(pols):
            field[i, :, c] = plate_field(plate, fi, phis, p)
    return RcsResult(freqs, 0.0, phis, pols, field, {"solver": "po-plate"})


def plate_peak_sigma(a_m, b_m, f):
    """Broadside PEC plate RCS 4 pi A^2 / lambda^2 in m^2."""
    lam = C0 / f
    return 4.0 * math.pi * (a_m * b_m) ** 2 / lam**2


def plate_first_null_deg(a_m, f):
    """Azimuth of the first pattern null, arcsin(lambda / a)."""
    s = (C0 / f) / a_m
    if s > 1:
        raise DomainError("plate is shorter than a wavelength; no null in the visible range")
    return math.degrees(math.asin(s))


def sphere_rcs_go(radius_m):
    """Geometric-optics sphere RCS, pi r^2; meaningful only for r much larger than lambda."""
    if radius_m < 0:
        raise DomainError("radius must be non-negative")
    return math.pi * radius_m**2
