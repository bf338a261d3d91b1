"""Monostatic RCS result container shared by the SBR and PO solvers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import FLOOR_DBSM, Polarization, to_dbsm_floored


@dataclass(frozen=True, eq=False)
class RcsResult:
    """Co-polarized far-field coefficient over (frequency, azimuth, polarization).

    `field[i, j, c]` is the complex coefficient F with E_s = F exp(-jkR)/R for
    a unit incident field, so sigma = 4 pi |F|^2.
    """

    freqs: np.ndarray
    theta_deg: float
    phis: np.ndarray
    pols: tuple[Polarization, ...]
    field: np.ndarray
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "freqs", np.asarray(self.freqs, dtype=float))
        object.__setattr__(self, "phis", np.asarray(self.phis, dtype=float))
        object.__setattr__(self, "pols", tuple(Polarization.parse(p) for p in self.pols))
        f = np.asarray(self.field, dtype=complex)
        expected = (len(self.freqs), len(self.phis), len(self.pols))
        if f.shape != expected:
            raise ValueError(f"field shape {f.shape} does not match grid {expected}")
        object.__setattr__(self, "field", f)

    @property
    def sigma_m2(self):
        return 4.0 * np.pi * np.abs(self.field) ** 2

    @property
    def sigma_dbsm(self):
        return to_dbsm_floored(self.sigma_m2, FLOOR_DBSM)

    def pol_index(self, pol):
        return self.pols.index(Polarization.parse(pol))

    def freq_index(self, f):
        i = int(np.argmin(np.abs(self.freqs - f)))
        if not np.isclose(self.freqs[i], f, rtol=1e-9, atol=0.0):
            raise KeyError(f"frequency {f} not in result")
        return i

    def cut(self, f, pol):
        """sigma_dbsm versus azimuth at one frequency and polarization."""
        return self.sigma_dbsm[self.freq_index(f), :, self.pol_index(pol)]

    def rows(self):
        """Flat records in (freq, phi, pol) order for CSV output."""
        s = self.sigma_dbsm
        for i, f in enumerate(self.freqs):
            for j, p in enumerate(self.phis):
                for c, pol in enumerate(self.pols):
                    v = self.field[i, j, c]
                    yield (float(f), self.theta_deg, float(p), pol.value, float(s[i, j, c]),
                           float(v.real), float(v.imag))
