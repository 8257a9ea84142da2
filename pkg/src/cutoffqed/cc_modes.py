"""Closed-resonator current-conserving modes.

The resonator has Neumann ends and a point capacitance chi_s at x0. Modes
solve

    sin(w) + chi_s * w * cos(w x0) * cos(w (1 - x0)) = 0,

which for x0 = 0 reduces to tan(w) = -chi_s * w.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .params import CircuitParams, ParameterError

__all__ = [
    "CCMode",
    "ModeTable",
    "asymptotic_amplitude",
    "asymptotic_coupling",
    "asymptotic_frequency",
    "characteristic",
    "characteristic_derivative",
    "coupling",
    "couplings",
    "eigenfrequencies",
    "mode_amplitude_at_x0",
    "mode_function",
    "mode_table",
    "mode_values",
    "modes",
    "residual",
    "zero_mode_amplitude",
]

_BISECT_TOL = 1e-6
_NEWTON_RTOL = 1e-12


@dataclass(frozen=True)
class CCMode:
    n: int
    omega_n: float
    phi_at_x0: float
    g_n: float


@dataclass(frozen=True)
class ModeTable:
    """Array view of the first N modes (index n = 1..N)."""

    n: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    g: np.ndarray


def characteristic(omega, chi_s: float, x0: float):
    omega = np.asarray(omega)
    return np.sin(omega) + chi_s * omega * np.cos(omega * x0) * np.cos(omega * (1.0 - x0))


def characteristic_derivative(omega, chi_s: float, x0: float):
    omega = np.asarray(omega)
    a = omega * x0
    b = omega * (1.0 - x0)
    ca, cb = np.cos(a), np.cos(b)
    return np.cos(omega) + chi_s * (
        ca * cb - omega * x0 * np.sin(a) * cb - omega * (1.0 - x0) * ca * np.sin(b)
    )


def residual(params: CircuitParams, omega):
    """Residual of the mode equation, scaled by 1 + chi_s*|w|."""
    omega = np.asarray(omega, dtype=float)
    return np.abs(characteristic(omega, params.chi_s, params.x0)) / (1.0 + params.chi_s * np.abs(omega))


def _polish(lo, hi, chi_s, x0, sign_lo):
    """Bisect [lo, hi] given the sign of f just right of lo, then Newton-polish."""
    f_lo = np.asarray(sign_lo, dtype=float)
    while np.any(hi - lo > _BISECT_TOL):
        mid = 0.5 * (lo + hi)
        f_mid = characteristic(mid, chi_s, x0)
        left = np.sign(f_mid) == f_lo
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    w = 0.5 * (lo + hi)
    slack = 1e-15 * hi
    for _ in range(50):
        step = characteristic(w, chi_s, x0) / characteristic_derivative(w, chi_s, x0)
        new = w - step
        # stay inside the bracket; keep the bisection estimate otherwise
        bad = ~np.isfinite(new) | (new < lo - slack) | (new > hi + slack)
        new = np.where(bad, w, new)
        done = np.all(np.abs(new - w) <= _NEWTON_RTOL * np.abs(new))
        w = new
        if done:
            break
    return w


def _alternating(n):
    return np.where(n % 2 == 1, 1.0, -1.0)  # (-1)^(n-1)


def _roots_x0_zero(chi_s: float, N: int) -> np.ndarray:
    n = np.arange(1, N + 1, dtype=float)
    return _polish((n - 0.5) * np.pi, n * np.pi, chi_s, 0.0, _alternating(n))


def _roots_general(chi_s: float, x0: float, N: int) -> np.ndarray:
    """Root n lies in ((n-1) pi, n pi] by rank-one interlacing.

    f has sign (-1)^(n-1) just right of (n-1) pi. At n pi it is either
    (-1)^n, or n pi is itself the root when x0 sits on a node of the bare
    mode (cos(n pi x0) = 0, the scatterer is invisible).
    """
    n = np.arange(1, N + 1, dtype=float)
    hi = n * np.pi
    node = chi_s * np.cos(hi * x0) ** 2 <= 1e-13
    roots = hi.copy()
    if np.any(~node):
        k = ~node
        roots[k] = _polish((n[k] - 1.0) * np.pi, hi[k], chi_s, x0, _alternating(n[k]))
    return roots


@lru_cache(maxsize=64)
def _cached_roots(chi_s: float, x0: float, N: int) -> np.ndarray:
    if chi_s == 0.0:
        roots = np.arange(1, N + 1, dtype=float) * np.pi
    elif x0 == 0.0:
        roots = _roots_x0_zero(chi_s, N)
    else:
        roots = _roots_general(chi_s, x0, N)
    roots.setflags(write=False)
    return roots


def eigenfrequencies(params: CircuitParams, N: int) -> np.ndarray:
    """First N positive closed-resonator eigenfrequencies, ascending."""
    if int(N) != N or N < 1:
        raise ParameterError("N must be a positive integer")
    if params.chi_s < 0:
        raise ParameterError("chi_s must be >= 0")
    return np.array(_cached_roots(float(params.chi_s), float(params.x0), int(N)))


def mode_amplitude_at_x0(params: CircuitParams, omega_n):
    """Normalized mode amplitude at the qubit, taken positive."""
    omega_n = np.asarray(omega_n, dtype=float)
    chi_s, x0 = params.chi_s, params.x0
    if x0 == 0.0:
        return np.sqrt(2.0) / np.sqrt(1.0 + chi_s + chi_s**2 * omega_n**2)
    ca = np.cos(omega_n * x0)
    cb = np.cos(omega_n * (1.0 - x0))
    num = 2.0 * ca**2 * cb**2
    den = x0 * cb**2 + (1.0 - x0) * ca**2 + chi_s * ca**2 * cb**2
    return np.sqrt(num / den)


def zero_mode_amplitude(chi_s: float) -> float:
    """Amplitude of the uniform (w = 0) mode."""
    return 1.0 / np.sqrt(1.0 + chi_s)


def couplings(params: CircuitParams, omega_n, phi_at_x0):
    """g_n = gamma * sqrt(chi_j * omega_j * omega_n) * phi_n(x0) / 2."""
    omega_n = np.asarray(omega_n, dtype=float)
    return 0.5 * params.gamma * np.sqrt(params.chi_j * params.omega_j * omega_n) * np.asarray(phi_at_x0)


def coupling(params: CircuitParams, mode: CCMode) -> float:
    return float(couplings(params, mode.omega_n, mode.phi_at_x0))


def mode_table(params: CircuitParams, N: int) -> ModeTable:
    omega = eigenfrequencies(params, N)
    phi = mode_amplitude_at_x0(params, omega)
    return ModeTable(
        n=np.arange(1, N + 1),
        omega=omega,
        phi=phi,
        g=couplings(params, omega, phi),
    )


def modes(params: CircuitParams, N: int) -> list[CCMode]:
    t = mode_table(params, N)
    return [CCMode(int(n), float(w), float(p), float(g)) for n, w, p, g in zip(t.n, t.omega, t.phi, t.g)]


def mode_values(params: CircuitParams, omega_n, x: float):
    """phi_n(x) for an array of eigenfrequencies at one position x."""
    omega = np.asarray(omega_n, dtype=float)
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    chi_s, x0 = params.chi_s, params.x0
    ca = np.cos(omega * x0)
    cb = np.cos(omega * (1.0 - x0))
    prod = ca * cb
    node = np.abs(prod) < 1e-8
    den = x0 * cb**2 + (1.0 - x0) * ca**2 + chi_s * prod**2
    with np.errstate(divide="ignore", invalid="ignore"):
        norm = np.sqrt(2.0 / den) * np.sign(prod)
    profile = cb * np.cos(omega * x) if x < x0 else ca * np.cos(omega * (1.0 - x))
    # at a node of the qubit position the scatterer is invisible: bare cosine
    bare = np.sqrt(2.0) * np.cos(omega * x)
    return np.where(node, bare, norm * profile)


def mode_function(params: CircuitParams, mode: Union[CCMode, float], x):
    """Normalized mode profile phi_n(x) with phi_n(x0) >= 0."""
    omega = mode.omega_n if isinstance(mode, CCMode) else float(mode)
    xs = np.asarray(x, dtype=float)
    out = np.array([float(mode_values(params, np.array([omega]), float(xi))[0]) for xi in xs.ravel()])
    return out.reshape(xs.shape) if xs.ndim else float(out[0])


def asymptotic_frequency(n):
    """Large-n limit n*pi - pi/2 of the x0 = 0 spectrum (chi_s > 0)."""
    return np.asarray(n) * np.pi - 0.5 * np.pi


def asymptotic_amplitude(params: CircuitParams, n):
    """Large-n amplitude sqrt(2)/(chi_s * w_n) at x0 = 0."""
    return np.sqrt(2.0) / (params.chi_s * asymptotic_frequency(n))


def asymptotic_coupling(params: CircuitParams, n):
    """Large-n coupling, decaying as 1/sqrt(w_n)."""
    w = asymptotic_frequency(n)
    return couplings(params, w, asymptotic_amplitude(params, n))
