"""Derivative-free calibration of the sheet R-L-C values against a band target.

The objective is the worst-case reflection (dB) over the band at normal
incidence. A differential-evolution stage explores the log-scaled box, then a
Nelder-Mead simplex polishes the incumbent. With ``updating="deferred"`` the
population is evaluated as a batch, so the result does not depend on how many
workers evaluate it.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import differential_evolution, minimize

from .absorber import LayerStack, SheetImpedance, _gamma
from .core import DomainError, Polarization

DEFAULT_BOUNDS = ((10.0, 1000.0), (0.1e-9, 100e-9), (1e-15, 1000e-15))


@dataclass(frozen=True)
class FitSpec:
    band: tuple[float, float] = (4e9, 18e9)
    target_db: float = -10.0
    grid_step: float = 0.1e9
    bounds: tuple[tuple[float, float], ...] = DEFAULT_BOUNDS

    def __post_init__(self):
        lo, hi = self.band
        if not 0 < lo <= hi:
            raise DomainError("band must satisfy 0 < f_lo <= f_hi")
        if not self.target_db < 0:
            raise DomainError("target_db must be negative")
        if not self.grid_step > 0:
            raise DomainError("grid_step must be positive")
        if len(self.bounds) != 3:
            raise DomainError("bounds are needed for (r_ohm, l_h, c_f)")
        for b_lo, b_hi in self.bounds:
            if not 0 < b_lo <= b_hi:
                raise DomainError(f"bad parameter bounds {(b_lo, b_hi)}")

    def frequencies(self):
        lo, hi = self.band
        n = int(math.floor((hi - lo) / self.grid_step + 1e-9)) + 1
        f = lo + self.grid_step * np.arange(n)
        if f[-1] < hi * (1 - 1e-12):
            f = np.append(f, hi)
        return f


class FitResult(NamedTuple):
    sheet: SheetImpedance
    worst_db: float
    success: bool
    evaluations: int


def band_objective(stack: LayerStack, freqs):
    """Worst |Gamma| in dB over `freqs` at normal incidence."""
    g = _gamma(stack, 2 * np.pi * freqs, 0.0, Polarization.TE)
    return float(20.0 * np.log10(np.max(np.abs(g))))


def fit_absorber(
    spec: FitSpec,
    template: LayerStack,
    seed: int = 0,
    workers: int = 1,
    maxiter: int = 300,
    popsize: int = 20,
) -> FitResult:
    """Fit the template's free sheet so the band's worst reflection is minimal.

    Never raises on a missed target: ``success`` is False and the best point
    found is returned with its objective value.
    """
    template.free_sheet_index()
    freqs = spec.frequencies()
    log_lo = np.log10([b[0] for b in spec.bounds])
    log_hi = np.log10([b[1] for b in spec.bounds])
    free = log_hi > log_lo
    n_eval = 0

    def unpack(x_free):
        x = log_lo.copy()
        x[free] = x_free
        r, l, c = (float(v) for v in 10.0 ** x)
        return SheetImpedance(r, l, c)

    def objective(x_free):
        return band_objective(template.with_sheet(unpack(np.asarray(x_free))), freqs)

    if not free.any():
        sheet = unpack(np.empty(0))
        worst = objective(np.empty(0))
        return FitResult(sheet, worst, worst <= spec.target_db, 1)

    bounds = list(zip(log_lo[free], log_hi[free]))
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        de = differential_evolution(
            objective,
            bounds,
            seed=seed,
            maxiter=maxiter,
            popsize=popsize,
            tol=1e-10,
            mutation=(0.5, 1.0),
            recombination=0.7,
            polish=False,
            init="sobol",
            updating="deferred",
            workers=pool.map if pool else 1,
        )
    finally:
        if pool:
            pool.shutdown()
    n_eval += de.nfev
    nm = minimize(
        objective,
        de.x,
        method="Nelder-Mead",
        bounds=bounds,
        options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 4000},
    )
    n_eval += nm.nfev
    x_best = nm.x if nm.fun <= de.fun else de.x
    sheet = unpack(np.asarray(x_best))
    worst = objective(x_best)
    return FitResult(sheet, worst, worst <= spec.target_db, n_eval)


def fitted_stack(template: LayerStack, result: FitResult):
    return template.with_sheet(result.sheet)
