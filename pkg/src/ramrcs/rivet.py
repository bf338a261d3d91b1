"""Homogenized fastener-head coverage on an absorbing surface.

Rivet heads are flush conducting patches. Because a 4 mm head is well under a
quarter wavelength below 18 GHz, the model mixes fields coherently: a fraction
`area_fraction` of the surface reflects like bare metal (-1) and the rest like
the absorber.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError

GAMMA_PEC = -1.0
CONFIG_LABELS = ("C1", "C2", "C3", "custom")

# head-area to surface-area ratios studied for the three rivet patterns
REFERENCE_FRACTIONS = (0.098, 0.044, 0.025)
REFERENCE_HEAD_DIAMETER = 4.0e-3
REFERENCE_COUNTERSINK_DEG = 90.0


@dataclass(frozen=True)
class RivetLayout:
    area_fraction: float
    head_diameter_m: float = REFERENCE_HEAD_DIAMETER
    countersink_deg: float = REFERENCE_COUNTERSINK_DEG
    config_label: str = "custom"

    def __post_init__(self):
        if not 0.0 <= self.area_fraction <= 1.0:
            raise DomainError(f"area fraction must lie in [0, 1], got {self.area_fraction}")
        if not self.head_diameter_m > 0:
            raise DomainError("head diameter must be positive")
        if self.config_label not in CONFIG_LABELS:
            raise DomainError(f"config label must be one of {CONFIG_LABELS}")

    @classmethod
    def from_pattern(cls, head_diameter_m, pitch_x_m, pitch_y_m, **kw):
        frac = fraction_from_pattern(head_diameter_m, pitch_x_m, pitch_y_m)
        return cls(area_fraction=frac, head_diameter_m=head_diameter_m, **kw)


def effective_reflection(gamma_ras, layout: RivetLayout):
    """Blend absorber reflection with flush-metal reflection by head area.

    Endpoints are exact: a zero fraction returns `gamma_ras` itself and a unit
    fraction returns -1.
    """
    fa = layout.area_fraction
    if fa == 0.0:
        return gamma_ras
    if fa == 1.0:
        return np.full_like(gamma_ras, GAMMA_PEC) if np.ndim(gamma_ras) else complex(GAMMA_PEC)
    return (1.0 - fa) * gamma_ras + fa * GAMMA_PEC


def fraction_from_pattern(head_diameter_m, pitch_x_m, pitch_y_m):
    """Head area over cell area for one head per rectangular pitch cell."""
    d = head_diameter_m
    if not d > 0:
        raise DomainError("head diameter must be positive")
    if not (pitch_x_m > d and pitch_y_m > d):
        raise DomainError("rivet head does not fit inside its pitch cell")
    return math.pi * (d / 2) ** 2 / (pitch_x_m * pitch_y_m)
