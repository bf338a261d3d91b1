"""Transmission-line model of PEC-backed multilayer absorbers.

Each dielectric layer is a section of transmission line whose propagation
constant and wave impedance depend on the incidence angle and polarization;
resistive (FSS) sheets are shunt elements. The input impedance is built by
walking from the backing toward the incidence side.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .core import C0, EPS0, ETA0, MU0, DomainError, FrequencyGrid, Polarization


class SingularStackError(ArithmeticError):
    """Shunt sheet and load impedance cancel exactly."""


@dataclass(frozen=True)
class Material:
    eps_r: float = 1.0
    tan_delta: float = 0.0
    mu_r: float = 1.0
    is_pec: bool = False

    def __post_init__(self):
        if self.is_pec:
            return
        if self.eps_r < 1.0:
            raise DomainError(f"eps_r must be >= 1, got {self.eps_r}")
        if self.tan_delta < 0.0:
            raise DomainError(f"tan_delta must be >= 0, got {self.tan_delta}")
        if self.mu_r < 1.0:
            raise DomainError(f"mu_r must be >= 1, got {self.mu_r}")

    @property
    def eps_c(self):
        return self.eps_r * (1.0 - 1j * self.tan_delta)


VACUUM = Material()
FR4 = Material(eps_r=4.4, tan_delta=0.02)
PEC_MATERIAL = Material(is_pec=True)


@dataclass(frozen=True)
class SheetImpedance:
    """Series R-L-C surrogate of a periodic resistive layer.

    ``l_h = 0`` drops the inductor and ``c_f = inf`` drops the capacitor,
    which leaves a purely resistive sheet.
    """

    r_ohm: float
    l_h: float
    c_f: float

    def __post_init__(self):
        if self.r_ohm < 0:
            raise DomainError("sheet resistance must be >= 0")
        if self.l_h < 0:
            raise DomainError("sheet inductance must be >= 0")
        if not self.c_f > 0:
            raise DomainError("sheet capacitance must be > 0")

    @classmethod
    def resistive(cls, r_ohm):
        return cls(r_ohm, 0.0, math.inf)

    def impedance(self, f):
        return sheet_impedance(self, f)


def sheet_impedance(sheet: SheetImpedance, f):
    """Series RLC impedance R + j(wL - 1/(wC)) in ohms."""
    f = np.asarray(f, dtype=float)
    if np.any(~(f > 0)):
        raise DomainError("frequency must be positive")
    w = 2.0 * np.pi * f
    x = w * sheet.l_h
    if math.isfinite(sheet.c_f):
        x = x - 1.0 / (w * sheet.c_f)
    z = sheet.r_ohm + 1j * x
    return complex(z) if np.ndim(z) == 0 else z


@dataclass(frozen=True)
class Layer:
    material: Material
    d: float

    def __post_init__(self):
        if self.material.is_pec:
            raise DomainError("PEC is a backing, not a layer")
        if not self.d > 0:
            raise DomainError(f"layer thickness must be positive, got {self.d}")


@dataclass(frozen=True)
class Sheet:
    impedance: SheetImpedance
    free: bool = False


class Backing(str, enum.Enum):
    PEC = "pec"
    FREE = "free"


Element = Union[Layer, Sheet]


@dataclass(frozen=True)
class LayerStack:
    """Elements ordered from the incidence side toward the backing."""

    elements: tuple[Element, ...] = ()
    backing: Backing = Backing.PEC
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "backing", Backing(self.backing))
        for el in self.elements:
            if not isinstance(el, (Layer, Sheet)):
                raise TypeError(f"stack element must be Layer or Sheet, got {type(el).__name__}")
        if not self.elements and self.backing is not Backing.PEC:
            raise DomainError("a stack needs at least one element or a PEC backing")

    @property
    def thickness(self):
        return sum(el.d for el in self.elements if isinstance(el, Layer))

    def free_sheet_index(self):
        idx = [i for i, el in enumerate(self.elements) if isinstance(el, Sheet) and el.free]
        if len(idx) != 1:
            raise DomainError(f"expected exactly one free sheet, found {len(idx)}")
        return idx[0]

    def with_sheet(self, sheet: SheetImpedance):
        """Copy of the stack with the free sheet replaced by `sheet`."""
        i = self.free_sheet_index()
        els = list(self.elements)
        els[i] = Sheet(sheet, free=True)
        return replace(self, elements=tuple(els))


def _sin2(theta_deg):
    theta_deg = np.asarray(theta_deg, dtype=float)
    if np.any((theta_deg < 0) | (theta_deg >= 90)):
        raise DomainError("incidence angle must lie in [0, 90) degrees")
    return np.sin(np.radians(theta_deg)) ** 2


def _wave_params(mat: Material, w, sin2, pol: Polarization):
    k0 = w / C0
    kz = k0 * np.sqrt(mat.mu_r * mat.eps_c - sin2 + 0j)
    # decaying branch under exp(+jwt)
    kz = np.where(kz.imag > 0, -kz, kz)
    z_te = w * MU0 * mat.mu_r / kz
    if pol is Polarization.TE:
        return kz, z_te
    # at normal incidence reuse the TE expression so both polarizations agree
    return kz, np.where(np.asarray(sin2) == 0.0, z_te, kz / (w * EPS0 * mat.eps_c))


def _free_space_impedance(sin2, pol):
    cos_t = np.sqrt(1.0 - sin2)
    return ETA0 / cos_t if pol is Polarization.TE else ETA0 * cos_t


def _planar_pol(pol):
    pol = Polarization.parse(pol).local
    if pol not in (Polarization.TE, Polarization.TM):
        raise DomainError(f"planar incidence needs TE or TM, got {pol}")
    return pol


def layer_wave_params(mat: Material, f, theta_deg, pol):
    """Longitudinal wavenumber kz (1/m) and wave impedance Z (ohm) of a layer.

    `theta_deg` is the free-space incidence angle; phase matching makes the
    transverse wavenumber the same in every layer.
    """
    if mat.is_pec:
        raise DomainError("PEC is a backing, not a layer")
    f = np.asarray(f, dtype=float)
    if np.any(~(f > 0)):
        raise DomainError("frequency must be positive")
    kz, z = _wave_params(mat, 2 * np.pi * f, _sin2(theta_deg), _planar_pol(pol))
    if np.ndim(kz) == 0:
        return complex(kz), complex(z)
    return kz, z


def _input_impedance(stack: LayerStack, w, sin2, pol):
    shape = np.broadcast(w, sin2).shape
    if stack.backing is Backing.PEC:
        z = np.zeros(shape, dtype=complex)
    else:
        z = np.broadcast_to(_free_space_impedance(sin2, pol), shape).astype(complex)
    for el in reversed(stack.elements):
        if isinstance(el, Layer):
            kz, zc = _wave_params(el.material, w, sin2, pol)
            t = np.tan(kz * el.d)
            z = zc * (z + 1j * zc * t) / (zc + 1j * z * t)
        else:
            zs = sheet_impedance(el.impedance, w / (2 * np.pi))
            den = zs + z
            if np.any(den == 0):
                raise SingularStackError("sheet impedance cancels the load impedance")
            z = zs * z / den
    return z


def input_impedance(stack: LayerStack, f, theta_deg, pol):
    """Impedance seen at the front face of `stack` (ohm)."""
    f = np.asarray(f, dtype=float)
    if np.any(~(f > 0)):
        raise DomainError("frequency must be positive")
    sin2 = _sin2(theta_deg)
    pol = _planar_pol(pol)
    if np.all(sin2 == 0.0):
        pol = Polarization.TE
    z = _input_impedance(stack, 2 * np.pi * f, sin2, pol)
    return complex(z) if np.ndim(z) == 0 else z


def reflection_coefficient(stack: LayerStack, f, theta_deg, pol):
    """Reflection coefficient of the tangential electric field, vectorized."""
    f = np.asarray(f, dtype=float)
    if np.any(~(f > 0)):
        raise DomainError("frequency must be positive")
    sin2 = _sin2(theta_deg)
    pol = _planar_pol(pol)
    return _gamma(stack, 2 * np.pi * f, sin2, pol)


def _gamma(stack, w, sin2, pol):
    if np.all(np.asarray(sin2) == 0.0):
        # both polarizations reduce to one expression; share it bit for bit
        pol = Polarization.TE
    zin = _input_impedance(stack, w, sin2, pol)
    z0 = _free_space_impedance(sin2, pol)
    g = (zin - z0) / (zin + z0)
    return complex(g) if np.ndim(g) == 0 else g


def gamma_from_cos(stack: LayerStack, f: float, cos_theta, pol):
    """Reflection coefficient for an array of incidence cosines.

    Used by the ray tracer, which knows incidence through d.n rather than as an
    angle in degrees.
    """
    c = np.clip(np.asarray(cos_theta, dtype=float), 0.0, 1.0)
    return _gamma(stack, 2 * np.pi * f, 1.0 - c * c, _planar_pol(pol))


@dataclass(frozen=True)
class ReflectionSpectrum:
    """Complex reflection over a frequency grid at one angle and polarization."""

    freqs: np.ndarray
    theta_deg: float
    pol: Polarization
    gamma: np.ndarray

    @property
    def db(self):
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(self.gamma))

    @property
    def entries(self):
        return {
            (float(f), self.theta_deg, self.pol): complex(g)
            for f, g in zip(self.freqs, self.gamma)
        }

    def worst_db(self, f_lo=-np.inf, f_hi=np.inf):
        m = (self.freqs >= f_lo) & (self.freqs <= f_hi)
        return float(self.db[m].max())


def reflection(stack: LayerStack, grid, theta_deg=0.0, pol=Polarization.TE):
    """Reflection spectrum of `stack` over a `FrequencyGrid` (or array of Hz)."""
    freqs = grid.array if isinstance(grid, FrequencyGrid) else np.atleast_1d(np.asarray(grid, float))
    pol = _planar_pol(pol)
    g = np.atleast_1d(reflection_coefficient(stack, freqs, theta_deg, pol))
    return ReflectionSpectrum(freqs=freqs, theta_deg=float(theta_deg), pol=pol, gamma=g)


# Reference absorber: FR4 / Jerusalem-cross sheet on a 0.125 mm FR4 carrier / FR4,
# 6.25 mm in total over a ground plane.
REFERENCE_TOTAL_THICKNESS = 6.25e-3
REFERENCE_CARRIER_THICKNESS = 0.125e-3
REFERENCE_SHEET_R = 100.0

# Output of fit_absorber(FitSpec(), reference_stack_template(), seed=0); the
# regression test in test_fit.py re-derives it.
REFERENCE_FITTED_SHEET = SheetImpedance(
    r_ohm=115.74757911198961, l_h=9.7695805106591e-10, c_f=2.7925988509114504e-13
)


def reference_stack(sheet: SheetImpedance | None = None, front_d=None, material=FR4):
    """Three-layer absorber: FR4 front, sheet + carrier, FR4 back, PEC ground.

    `front_d` is the FR4 thickness above the sheet. By default the two FR4
    layers around the sheet and carrier have equal thickness.
    """
    rest = REFERENCE_TOTAL_THICKNESS - REFERENCE_CARRIER_THICKNESS
    if front_d is None:
        front_d = rest / 2
    if not 0 < front_d < rest:
        raise DomainError("front layer must leave room for the back layer")
    sheet = REFERENCE_FITTED_SHEET if sheet is None else sheet
    return LayerStack(
        elements=(
            Layer(material, front_d),
            Sheet(sheet, free=True),
            Layer(material, REFERENCE_CARRIER_THICKNESS),
            Layer(material, rest - front_d),
        ),
        backing=Backing.PEC,
        name="reference-ras",
    )


def reference_stack_template(front_d=None):
    """Reference geometry with an unfitted 100-ohm sheet, ready for `fit_absorber`."""
    return reference_stack(SheetImpedance(REFERENCE_SHEET_R, 1e-9, 300e-15), front_d=front_d)
