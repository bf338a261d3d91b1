"""Median RCS over an azimuth window."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, Polarization
from .results import RcsResult

# tolerance when matching window edges to grid azimuths
_EDGE_TOL = 1e-9


def lower_median(values):
    """Lower of the two middle samples for even counts, the middle one otherwise.

    The result is always one of the inputs, so it commutes with any monotone
    map such as dB to linear.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DomainError("median of an empty sample set")
    if np.isnan(v).any():
        raise DomainError("median input contains NaN")
    return float(np.partition(v, (v.size - 1) // 2)[(v.size - 1) // 2])


@dataclass(frozen=True, eq=False)
class MedianReport:
    """`median_dbsm[i, c]` for frequency `freqs[i]` and polarization `pols[c]`."""

    freqs: np.ndarray
    pols: tuple[Polarization, ...]
    median_dbsm: np.ndarray
    phi_lo: float
    phi_hi: float
    n_samples: int
    label: str = ""

    def value(self, f, pol):
        i = int(np.argmin(np.abs(self.freqs - f)))
        return float(self.median_dbsm[i, self.pols.index(Polarization.parse(pol))])

    def rows(self):
        for i, f in enumerate(self.freqs):
            for c, p in enumerate(self.pols):
                yield (self.label, float(f), p.value, self.phi_lo, self.phi_hi, self.n_samples,
                       float(self.median_dbsm[i, c]))


def median_rcs(result: RcsResult, phi_lo=None, phi_hi=None, label=""):
    """Median sigma in dBsm over azimuths in [phi_lo, phi_hi] (defaults: full sweep)."""
    phis = result.phis
    lo = float(phis.min()) if phi_lo is None else float(phi_lo)
    hi = float(phis.max()) if phi_hi is None else float(phi_hi)
    if lo > hi:
        raise DomainError("median window is inverted")
    if lo < phis.min() - _EDGE_TOL or hi > phis.max() + _EDGE_TOL:
        raise DomainError(f"median window [{lo}, {hi}] exceeds the swept range")
    mask = (phis >= lo - _EDGE_TOL) & (phis <= hi + _EDGE_TOL)
    if not mask.any():
        raise DomainError(f"no azimuth samples in [{lo}, {hi}]")
    s = result.sigma_dbsm[:, mask, :]
    med = np.empty((s.shape[0], s.shape[2]))
    for i in range(s.shape[0]):
        for c in range(s.shape[2]):
            med[i, c] = lower_median(s[i, :, c])
    return MedianReport(result.freqs.copy(), result.pols, med, lo, hi, int(mask.sum()), label)
