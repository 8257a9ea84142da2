"""Quasi-bound resonances of the open resonator.

With a = 1 - 2 i chi w for each port, the complex resonances w = nu - i kappa
are the zeros of the entire function

    f(w) = exp(2iw) - a_L a_R
           + (i/2) chi_s w [exp(2iw x0) + a_L] [exp(2iw(1-x0)) + a_R].

Roots come in pairs w and -conj(w); only Re w >= 0 is stored. The function
has no branch cuts, so Newton iteration and contour counting need no care
beyond overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import cc_modes
from .params import CircuitParams, ParameterError

__all__ = [
    "CFResonance",
    "ConvergenceError",
    "RootEscapeError",
    "characteristic",
    "characteristic_derivative",
    "count_roots",
    "imaginary_root",
    "resonance_table",
    "resonances",
    "scaled_residual",
]

_NEWTON_RTOL = 1e-12
_MAX_ITER = 200
_DUPLICATE_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """Newton iteration failed to converge."""


class RootEscapeError(RuntimeError):
    """A resonance left the lower half-plane."""


@dataclass(frozen=True)
class CFResonance:
    n: int
    nu_n: float
    kappa_n: float
    residual: float

    @property
    def omega(self) -> complex:
        return complex(self.nu_n, -self.kappa_n)


def characteristic(omega, chi_L, chi_R, chi_s, x0):
    w = np.asarray(omega, dtype=complex)
    aL = 1.0 - 2j * chi_L * w
    aR = 1.0 - 2j * chi_R * w
    p = np.exp(2j * w * x0) + aL
    q = np.exp(2j * w * (1.0 - x0)) + aR
    return np.exp(2j * w) - aL * aR + 0.5j * chi_s * w * p * q


def characteristic_derivative(omega, chi_L, chi_R, chi_s, x0):
    w = np.asarray(omega, dtype=complex)
    aL = 1.0 - 2j * chi_L * w
    aR = 1.0 - 2j * chi_R * w
    eL = np.exp(2j * w * x0)
    eR = np.exp(2j * w * (1.0 - x0))
    p = eL + aL
    q = eR + aR
    dp = 2j * x0 * eL - 2j * chi_L
    dq = 2j * (1.0 - x0) * eR - 2j * chi_R
    return (
        2j * np.exp(2j * w)
        + 2j * chi_L * aR
        + 2j * chi_R * aL
        + 0.5j * chi_s * (p * q + w * (dp * q + p * dq))
    )


def _scale(w, chi_L, chi_R, chi_s):
    """Magnitude of the individual terms of f, for relative residuals."""
    m = np.abs(w)
    big = np.exp(2.0 * np.maximum(-np.imag(w), 0.0))
    ports = (1.0 + 2 * chi_L * m) * (1.0 + 2 * chi_R * m)
    return big + ports + 0.5 * chi_s * m * (big + 1.0 + 2 * chi_L * m) * (big + 1.0 + 2 * chi_R * m)


def scaled_residual(omega, chi_L, chi_R, chi_s, x0):
    w = np.asarray(omega, dtype=complex)
    return np.abs(characteristic(w, chi_L, chi_R, chi_s, x0)) / _scale(w, chi_L, chi_R, chi_s)


def _newton(w, chi_L, chi_R, chi_s, x0, max_iter):
    """Vectorized Newton; returns (roots, converged mask)."""
    w = np.array(w, dtype=complex)
    done = np.zeros(w.shape, dtype=bool)
    for _ in range(max_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            step = characteristic(w, chi_L, chi_R, chi_s, x0) / characteristic_derivative(w, chi_L, chi_R, chi_s, x0)
        step = np.where(done | ~np.isfinite(step), 0.0, step)
        w = w - step
        done |= np.abs(step) <= _NEWTON_RTOL * np.maximum(np.abs(w), 1.0)
        if done.all():
            break
    return w, done


def _continue_from_closed(chi_L, chi_R, chi_s, x0, N):
    """Track closed-resonator roots as the ports open (lambda: 0 -> 1)."""
    start = cc_modes._cached_roots(chi_s, x0, N)
    w = start.astype(complex)
    spacing = np.minimum(np.diff(np.concatenate([[0.0], start])), np.pi)
    lam = 0.0
    step = 1e-6
    while lam < 1.0:
        target = min(1.0, lam + step) if lam > 0 else step
        trial, ok = _newton(w, target * chi_L, target * chi_R, chi_s, x0, 30)
        jump = np.abs(trial - w)
        if ok.all() and np.all(jump < 0.25 * spacing):
            w = trial
            lam = target
            step = min(2.0 * step, 1.0) if lam < 1.0 else step
        else:
            step *= 0.5
            if step < 1e-12:
                raise ConvergenceError("continuation from the closed resonator stalled")
    w, ok = _newton(w, chi_L, chi_R, chi_s, x0, _MAX_ITER)
    if not ok.all():
        bad = np.flatnonzero(~ok) + 1
        raise ConvergenceError(f"Newton did not converge for resonance(s) n={bad[:5].tolist()}")
    return w


def _axis_function(k, cL, cR, cs, x0):
    """exp(-2k) f(-ik), real for real k."""
    aL = 1.0 - 2.0 * cL * k
    aR = 1.0 - 2.0 * cR * k
    left = 1.0 + aL * np.exp(-2.0 * k * x0)
    right = 1.0 + aR * np.exp(-2.0 * k * (1.0 - x0))
    return 1.0 - aL * aR * np.exp(-2.0 * k) + 0.5 * cs * k * left * right


def imaginary_root(params: CircuitParams, kappa_max: float = 1e8) -> float:
    """Smallest kappa > 0 with f(-i kappa) = 0, or 0.0 if there is none.

    On the negative imaginary axis f is real, so the search is a real scan.
    The scaled function exp(-2 kappa) f(-i kappa) avoids overflow.
    """
    def g(k):
        return _axis_function(k, params.chi_L, params.chi_R, params.chi_s, params.x0)

    ks = np.geomspace(1e-6, kappa_max, 4000)
    vals = g(ks)
    idx = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    if idx.size == 0:
        return 0.0
    i = idx[0]
    return float(brentq(g, ks[i], ks[i + 1], xtol=1e-14, rtol=1e-14))


@lru_cache(maxsize=64)
def _cached_table(chi_L, chi_R, chi_s, x0, N) -> np.ndarray:
    if chi_L == 0.0 and chi_R == 0.0:
        w = cc_modes._cached_roots(chi_s, x0, N).astype(complex)
    else:
        w = _continue_from_closed(chi_L, chi_R, chi_s, x0, N)
        if np.any(w.imag > 0):
            bad = np.flatnonzero(w.imag > 0) + 1
            raise RootEscapeError(f"resonance(s) n={bad[:5].tolist()} left the lower half-plane")
        if np.any(np.diff(w.real) <= _DUPLICATE_TOL):
            raise ConvergenceError("continuation produced duplicate or unordered resonances")
    w.setflags(write=False)
    return w


def resonance_table(params: CircuitParams, N: int) -> np.ndarray:
    """Complex resonances n = 1..N, ordered by real part."""
    if int(N) != N or N < 1:
        raise ParameterError("N must be a positive integer")
    return np.array(_cached_table(float(params.chi_L), float(params.chi_R), float(params.chi_s), float(params.x0), int(N)))


def resonances(params: CircuitParams, N: int) -> list[CFResonance]:
    """Resonances n = 0..N.

    The n = 0 entry is the purely imaginary root -i kappa_0. When the
    negative imaginary axis holds no root other than the origin, it is the
    static root w = 0 with kappa_0 = 0.
    """
    w = resonance_table(params, N)
    cL, cR, cs, x0 = params.chi_L, params.chi_R, params.chi_s, params.x0
    res = scaled_residual(w, cL, cR, cs, x0)
    k0 = imaginary_root(params)
    if k0 > 0:
        scale = 1.0 + 0.5 * cs * k0 * (1.0 + 2 * cL * k0) * (1.0 + 2 * cR * k0)
        r0 = abs(float(_axis_function(k0, cL, cR, cs, x0))) / scale
    else:
        r0 = 0.0
    out = [CFResonance(0, 0.0, k0, r0)]
    out += [CFResonance(n, float(z.real), float(-z.imag), float(r)) for n, z, r in zip(range(1, N + 1), w, res)]
    return out


def count_roots(params: CircuitParams, re_min: float, re_max: float, im_min: float, im_max: float,
                min_points: int = 2048) -> int:
    """Number of zeros of f inside a rectangle, by the argument principle.

    The phase of f is tracked along the boundary with refinement until every
    phase step is below pi/8; a zero on the boundary raises ValueError.
    """
    if not (re_min < re_max and im_min < im_max):
        raise ValueError("empty rectangle")
    corners = [complex(re_min, im_min), complex(re_max, im_min), complex(re_max, im_max), complex(re_min, im_max)]
    args = (params.chi_L, params.chi_R, params.chi_s, params.x0)
    total = 0.0
    for a, b in zip(corners, corners[1:] + corners[:1]):
        n = min_points
        while True:
            t = np.linspace(0.0, 1.0, n + 1)
            z = a + (b - a) * t
            fz = characteristic(z, *args)
            if np.any(np.abs(fz) < 1e-13 * _scale(z, args[0], args[1], args[2])):
                raise ValueError("a zero lies on the contour; move the rectangle")
            dphi = np.angle(fz[1:] / fz[:-1])
            if np.max(np.abs(dphi)) < np.pi / 8 or n > 2**22:
                break
            n *= 4
        total += dphi.sum()
    return int(round(total / (2 * np.pi)))
