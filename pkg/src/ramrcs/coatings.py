"""Surface coatings as seen by the ray tracer and the PO oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .absorber import LayerStack, gamma_from_cos
from .core import Polarization
from .rivet import RivetLayout, effective_reflection


@dataclass(frozen=True)
class Coating:
    """PEC when `stack` is None, otherwise a layered absorber.

    An optional `rivets` layout blends the absorber response with flush
    metal heads.
    """

    stack: LayerStack | None = None
    rivets: RivetLayout | None = None
    name: str = ""

    @property
    def is_pec(self):
        return self.stack is None

    def gamma(self, f, cos_theta):
        """(Gamma_TE, Gamma_TM) arrays for incidence cosines `cos_theta`."""
        c = np.asarray(cos_theta, dtype=float)
        if self.stack is None:
            g = np.full(c.shape, -1.0 + 0j)
            return g, g.copy()
        gte = gamma_from_cos(self.stack, f, c, Polarization.TE)
        gtm = gamma_from_cos(self.stack, f, c, Polarization.TM)
        if self.rivets is not None:
            gte = effective_reflection(gte, self.rivets)
            gtm = effective_reflection(gtm, self.rivets)
        return np.asarray(gte, dtype=complex), np.asarray(gtm, dtype=complex)

    def gamma_at(self, f, theta_deg, pol):
        """Scalar reflection at an angle in degrees for a planar TE/TM tag."""
        gte, gtm = self.gamma(f, np.cos(np.radians(theta_deg)))
        pol = Polarization.parse(pol).local
        return complex(gte if pol is Polarization.TE else gtm)


PEC = Coating(name="pec")

@dataclass(frozen=True)
class MatchedCoating(Coating):
    """Perfect absorber (Gamma = 0) used in limit tests."""

    name: str = "ideal"

    @property
    def is_pec(self):
        return False

    def gamma(self, f, cos_theta):
        c = np.asarray(cos_theta, dtype=float)
        z = np.zeros(c.shape, dtype=complex)
        if self.rivets is not None:
            z = np.asarray(effective_reflection(z, self.rivets), dtype=complex)
        return z, z.copy()
