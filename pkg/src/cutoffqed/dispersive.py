"""Dispersive multimode Purcell and Lamb sums with tail diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cc_modes, cf_modes
from .params import CircuitParams, ParameterError

__all__ = [
    "DispersiveSeries",
    "ResonanceCollisionError",
    "TailFit",
    "lamb_dispersive",
    "purcell_dispersive",
    "tail_exponent",
]

GUARD = 1e-6
CONVERGENCE_MARGIN = 0.1


class ResonanceCollisionError(ValueError):
    """The qubit frequency sits within the guard band of a resonance."""

    def __init__(self, n: int, delta: float):
        super().__init__(f"omega_j collides with mode n={n} (|delta_n|={abs(delta):.3e} < {GUARD})")
        self.n = n
        self.delta = delta


@dataclass(frozen=True)
class TailFit:
    exponent: float
    n_min: int
    n_max: int
    verdict: str  # "convergent" or "divergent"


@dataclass(frozen=True)
class DispersiveSeries:
    n: np.ndarray
    g: np.ndarray
    nu: np.ndarray
    delta: np.ndarray
    kappa: np.ndarray
    purcell_term: np.ndarray
    lamb_term: np.ndarray
    purcell_partial: np.ndarray
    lamb_partial: np.ndarray
    purcell_tail: TailFit
    frequencies: str
    counter_rotating: bool

    @property
    def purcell(self) -> float:
        return float(self.purcell_partial[-1])

    @property
    def lamb(self) -> float:
        return float(self.lamb_partial[-1])


def tail_exponent(n, terms) -> TailFit:
    """Least-squares slope of log|term| against log n over the top half-decade."""
    n = np.asarray(n, dtype=float)
    terms = np.abs(np.asarray(terms, dtype=float))
    n_max = n[-1]
    sel = (n >= n_max / np.sqrt(10.0)) & (terms > 0)
    if sel.sum() < 2:
        return TailFit(float("nan"), int(n_max), int(n_max), "divergent")
    slope = float(np.polyfit(np.log(n[sel]), np.log(terms[sel]), 1)[0])
    verdict = "convergent" if slope < -1.0 - CONVERGENCE_MARGIN else "divergent"
    return TailFit(slope, int(n[sel][0]), int(n_max), verdict)


def _series(params: CircuitParams, N: int, frequencies: str, counter_rotating: bool) -> DispersiveSeries:
    if int(N) != N or N < 1:
        raise ParameterError("N must be a positive integer")
    if frequencies not in ("cf", "cc"):
        raise ValueError("frequencies must be 'cf' or 'cc'")
    table = cc_modes.mode_table(params, N)
    z = cf_modes.resonance_table(params, N)
    kappa = -z.imag
    nu = z.real if frequencies == "cf" else table.omega
    wj = params.omega_j
    delta = wj - nu
    hit = np.flatnonzero(np.abs(delta) < GUARD)
    if hit.size:
        raise ResonanceCollisionError(int(hit[0]) + 1, float(delta[hit[0]]))
    g = table.g
    if counter_rotating:
        # both rotating and counter-rotating denominators of the linear model
        lamb = -2.0 * g**2 * nu / (nu**2 - wj**2)
        purcell = 4.0 * g**2 * nu * wj * kappa / (nu**2 - wj**2) ** 2
    else:
        lamb = g**2 / delta
        purcell = (g / delta) ** 2 * kappa
    return DispersiveSeries(
        n=table.n,
        g=g,
        nu=nu,
        delta=delta,
        kappa=kappa,
        purcell_term=purcell,
        lamb_term=lamb,
        purcell_partial=np.cumsum(purcell),
        lamb_partial=np.cumsum(lamb),
        purcell_tail=tail_exponent(table.n, purcell),
        frequencies=frequencies,
        counter_rotating=counter_rotating,
    )


def purcell_dispersive(params: CircuitParams, N: int, frequencies: str = "cf",
                       counter_rotating: bool = False) -> DispersiveSeries:
    """Per-mode terms and partial sums of sum_n (g_n/delta_n)^2 kappa_n.

    ``frequencies`` selects the mode frequencies nu_n entering delta_n:
    real parts of the open resonances ("cf") or closed eigenfrequencies
    ("cc"). ``counter_rotating=True`` replaces the rotating-wave terms by
    the second-order expansion of the full linear model, which keeps the
    counter-rotating denominators.
    """
    return _series(params, N, frequencies, counter_rotating)


def lamb_dispersive(params: CircuitParams, N: int, frequencies: str = "cf",
                    counter_rotating: bool = False) -> DispersiveSeries:
    """Per-mode terms and partial sums of sum_n g_n^2/delta_n (signed)."""
    return _series(params, N, frequencies, counter_rotating)
