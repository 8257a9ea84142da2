"""Green's function of the loaded resonator by 2x2 transfer matrices.

G(x, x', w) solves (d^2/dx^2 + w^2 chi(x, x0)) G = delta(x - x') with the
point capacitance chi_s at x0 entering as the derivative jump
G'(x0+) - G'(x0-) = -chi_s w^2 G(x0), and outgoing waves beyond the port
capacitors. States are (G, dG/dx) pairs.
"""

from __future__ import annotations

import numpy as np

from . import cc_modes
from .params import CircuitParams

__all__ = [
    "SingularSystemError",
    "green_direct",
    "green_spectral_closed",
    "kernel_K",
    "transmission",
]

_COND_LIMIT = 1e12
_PROBE_GUARD = 1e-6


class SingularSystemError(ArithmeticError):
    """The boundary-matching system is numerically singular."""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


def _propagate(state, w, d):
    g, dg = state
    c, s = np.cos(w * d), np.sin(w * d)
    return np.array([c * g + s / w * dg, -w * s * g + c * dg])


def _scatter(state, w, chi_s, direction=1):
    g, dg = state
    return np.array([g, dg - direction * chi_s * w**2 * g])


def _left_state(w, chi_L):
    return np.array([chi_L * w + 1j, -1j * chi_L * w**2], dtype=complex)


def _right_state(w, chi_R):
    return np.array([chi_R * w + 1j, 1j * chi_R * w**2], dtype=complex)


def _from_left(params, w, x):
    """Left solution carried from 0+ to x."""
    x0, chi_s = params.x0, params.chi_s
    state = _left_state(w, params.chi_L)
    if x > x0 or (x == x0 and x0 == 0.0):
        state = _propagate(state, w, x0)
        state = _scatter(state, w, chi_s, +1)
        return _propagate(state, w, x - x0)
    return _propagate(state, w, x)


def _from_right(params, w, x):
    """Right solution carried from 1- back to x."""
    x0, chi_s = params.x0, params.chi_s
    state = _right_state(w, params.chi_R)
    if x < x0:
        state = _propagate(state, w, -(1.0 - x0))
        state = _scatter(state, w, chi_s, -1)
        return _propagate(state, w, -(x0 - x))
    return _propagate(state, w, -(1.0 - x))


def _wronskian(params, w):
    a = _from_left(params, w, 1.0)
    b = _right_state(w, params.chi_R)
    W = a[0] * b[1] - a[1] * b[0]
    scale = abs(w)
    na = np.hypot(abs(a[0]), abs(a[1]) / scale)
    nb = np.hypot(abs(b[0]), abs(b[1]) / scale)
    cond = np.inf if W == 0 else na * nb * scale / abs(W)
    return W, cond


def _check_position(x):
    if not 0.0 <= x <= 1.0:
        raise ValueError("positions must lie in [0, 1]")


def green_direct(params: CircuitParams, x: float, x_prime: float, omega: complex) -> complex:
    """G(x, x', w) for real or complex w != 0."""
    _check_position(x)
    _check_position(x_prime)
    w = complex(omega)
    if w == 0:
        raise ValueError("omega must be nonzero")
    W, cond = _wronskian(params, w)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularSystemError(f"boundary-matching system singular at omega={w}", cond)
    lo, hi = min(x, x_prime), max(x, x_prime)
    return complex(_from_left(params, w, lo)[0] * _from_right(params, w, hi)[0] / W)


def green_spectral_closed(params: CircuitParams, x: float, x_prime: float, omega: float, N: int) -> complex:
    """Closed-resonator mode sum including the uniform zero mode.

    Truncation error away from resonance is O(1/N) for chi_s = 0 and
    O(1/N^3) at x = x' = x0 for chi_s > 0.
    """
    if not params.closed:
        raise ValueError("spectral representation requires chi_R = chi_L = 0")
    _check_position(x)
    _check_position(x_prime)
    w = complex(omega)
    wn = cc_modes.eigenfrequencies(params, N)
    near = np.min(np.abs(np.concatenate([[0.0], wn]) - w))
    if near < _PROBE_GUARD:
        raise ValueError(f"probe omega={omega} lies within {_PROBE_GUARD} of an eigenfrequency")
    phi0 = cc_modes.zero_mode_amplitude(params.chi_s)
    total = phi0**2 / w**2
    total += np.sum(cc_modes.mode_values(params, wn, x) * cc_modes.mode_values(params, wn, x_prime) / (w**2 - wn**2))
    return complex(total)


def kernel_K(params: CircuitParams, n_power: int, omega_grid) -> np.ndarray:
    """Samples of gamma * chi_s * w^n * G(x0, x0, w) on a frequency grid."""
    if n_power not in (1, 2):
        raise ValueError("n_power must be 1 or 2")
    grid = np.atleast_1d(np.asarray(omega_grid, dtype=complex))
    pref = params.gamma * params.chi_s
    if pref == 0.0:
        return np.zeros(grid.shape, dtype=complex)
    x0 = params.x0
    out = np.empty(grid.shape, dtype=complex)
    for i, w in enumerate(grid):
        out[i] = pref * w**n_power * green_direct(params, x0, x0, w)
    return out


def _transfer(params, w):
    x0, chi_s = params.x0, params.chi_s

    def cap(chi):
        return np.array([[1.0, -1.0 / (chi * w**2)], [0.0, 1.0]], dtype=complex)

    def prop(d):
        c, s = np.cos(w * d), np.sin(w * d)
        return np.array([[c, s / w], [-w * s, c]], dtype=complex)

    jump = np.array([[1.0, 0.0], [-chi_s * w**2, 1.0]], dtype=complex)
    return cap(params.chi_R) @ prop(1.0 - x0) @ jump @ prop(x0) @ cap(params.chi_L)


def transmission(params: CircuitParams, omega_grid) -> np.ndarray:
    """|T(w)|^2 for a unit wave incident from the left."""
    if params.chi_R <= 0 or params.chi_L <= 0:
        raise ValueError("transmission requires chi_R, chi_L > 0")
    grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    out = np.empty(grid.shape)
    for i, w in enumerate(grid):
        if w <= 0:
            raise ValueError("transmission frequencies must be positive")
        (a, b), (c, d) = _transfer(params, w)
        P = 1j * w * a - c
        Q = 1j * w * (1j * w * b - d)
        if P == Q:
            raise SingularSystemError(f"scattering system singular at omega={w}", np.inf)
        r = -(P + Q) / (P - Q)
        t = np.exp(-1j * w) * (a * (1 + r) + 1j * w * b * (1 - r))
        out[i] = abs(t) ** 2
    return out
