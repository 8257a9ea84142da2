"""Single-excitation spontaneous emission into a 1D continuum.

The excited amplitude obeys dc/dt = -int_0^t K(t - t') c(t') dt' with

    K(tau) = P int_0^inf w(omega) exp(i (omega_j - omega) tau) d omega,
    P = gamma chi_s omega_j / (8 pi),   w(omega) = omega |phi(omega)|^2.

For the suppressed profile |phi|^2 = 2/(1 + chi_s + chi_s^2 omega^2) the
weight is (2/chi_s^2) omega/(omega^2 + c^2) with c^2 = (1 + chi_s)/chi_s^2,
integrable against the oscillating exponential. The flat profile
|phi|^2 = N^2 makes every kernel integral diverge with the cutoff.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, special

__all__ = [
    "AccuracyWarning",
    "KernelDivergenceError",
    "KernelLaplace",
    "WwKernelSpec",
    "decay_amplitude",
    "kernel_at_zero",
    "kernel_laplace",
    "kernel_time",
    "laplace_pole",
    "markov_rate",
]

ETA = 1e-6
DOUBLING_TOL = 1e-6
RICHARDSON_TOL = 1e-4
_QUAD = dict(epsabs=0.0, epsrel=1e-12, limit=400)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class AccuracyWarning(UserWarning):
    """Step-halving check of the Volterra march failed its tolerance."""


class KernelDivergenceError(ValueError):
    """The kernel integral does not converge for this coupling profile."""

    def __init__(self, report: dict):
        super().__init__(f"kernel integral diverges: {report}")
        self.report = report


@dataclass(frozen=True)
class WwKernelSpec:
    gamma: float
    chi_s: float
    omega_j: float
    profile: str = "suppressed"
    omega_max: float = 1e3
    amplitude2: float = 2.0  # N^2 for the flat profile

    def __post_init__(self):
        if self.profile not in ("suppressed", "flat"):
            raise ValueError("profile must be 'suppressed' or 'flat'")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.chi_s < 0:
            raise ValueError("chi_s must be >= 0")
        if self.omega_j <= 0:
            raise ValueError("omega_j must be > 0")
        if self.omega_max <= self.omega_j:
            raise ValueError("omega_max must exceed omega_j")
        if self.amplitude2 <= 0:
            raise ValueError("amplitude2 must be > 0")

    @classmethod
    def from_params(cls, params, **kw) -> "WwKernelSpec":
        return cls(gamma=params.gamma, chi_s=params.chi_s, omega_j=params.omega_j, **kw)

    @property
    def prefactor(self) -> float:
        return self.gamma * self.chi_s * self.omega_j / (8.0 * np.pi)

    @property
    def trivial(self) -> bool:
        return self.prefactor == 0.0

    @property
    def corner(self) -> float:
        """c = sqrt(1 + chi_s)/chi_s, the suppression scale."""
        return math.sqrt(1.0 + self.chi_s) / self.chi_s

    def weight(self, omega):
        """omega |phi(omega)|^2; accepts complex omega."""
        if self.profile == "flat":
            return self.amplitude2 * omega
        return 2.0 * omega / (1.0 + self.chi_s + self.chi_s**2 * omega**2)


@dataclass(frozen=True)
class KernelLaplace:
    """K~(s) with its cutoff-doubling certificate; value is None when divergent."""

    s: complex
    value: Optional[complex]
    omega_max: float
    relative_change: float
    tail_exponent: float
    divergent: bool
    truncated: tuple = field(default=(), repr=False)

    def report(self) -> dict:
        return {
            "s": [self.s.real, self.s.imag],
            "omega_max": self.omega_max,
            "relative_change": self.relative_change,
            "tail_exponent": self.tail_exponent,
            "divergent": self.divergent,
            "truncated": [[v.real, v.imag] for v in self.truncated],
        }


def _cquad(f, a, b, points=None):
    re = integrate.quad(lambda x: f(x).real, a, b, points=points, **_QUAD)[0]
    im = integrate.quad(lambda x: f(x).imag, a, b, points=points, **_QUAD)[0]
    return complex(re, im)


def _resolvent_integral(spec: WwKernelSpec, z: complex, upper: float, continued: bool = False) -> complex:
    """int_0^upper w(omega)/(omega - z) d omega with the pole subtracted.

    ``continued`` continues the result analytically from Im z > 0 to
    Im z < 0 across the integration segment.
    """
    wz = spec.weight(z)

    def f(x):
        d = x - z
        return (spec.weight(x) - wz) / d

    if spec.profile == "flat":
        total = complex(spec.amplitude2 * upper)  # divided difference is constant
    else:
        pts = [p for p in (z.real,) if 0.0 < p < upper]
        total = _cquad(f, 0.0, upper, points=pts or None)
    log_term = np.log(upper - z) - np.log(-z)
    if continued and z.imag < 0 and 0.0 < z.real < upper:
        log_term += 2j * np.pi
    return total + wz * log_term


def _tail(spec: WwKernelSpec, z: complex, start: float) -> complex:
    """int_start^inf w/(omega - z) for the suppressed profile."""
    return _cquad(lambda x: spec.weight(x) / (x - z), start, np.inf)


def _laplace_full(spec: WwKernelSpec, s: complex, upper: float, continued: bool = False) -> complex:
    z = spec.omega_j + 1j * s
    return spec.prefactor * (_resolvent_integral(spec, z, upper, continued) + _tail(spec, z, upper)) / 1j


def kernel_laplace(spec: WwKernelSpec, s: complex) -> KernelLaplace:
    """K~(s) = P int w(omega)/(s + i(omega - omega_j)) d omega.

    Points on the imaginary axis are shifted to s + ETA. The value is
    certified by repeating the evaluation with omega_max doubled.
    """
    s = complex(s)
    if s.real < 0:
        raise ValueError("kernel_laplace requires Re s >= 0; use laplace_pole for the continuation")
    if s.real == 0:
        s = s + ETA
    Om = spec.omega_max
    if spec.trivial:
        return KernelLaplace(s, 0j, Om, 0.0, float("nan"), False)
    z = spec.omega_j + 1j * s
    f1 = abs(spec.weight(Om) / (Om - z))
    f2 = abs(spec.weight(2 * Om) / (2 * Om - z))
    exponent = float(np.log(f1 / f2) / np.log(2.0))
    trunc = tuple(spec.prefactor * _resolvent_integral(spec, z, U) / 1j for U in (Om, 2 * Om))
    if exponent <= 1.0 + 0.1:
        rel = abs(trunc[1] - trunc[0]) / abs(trunc[0])
        return KernelLaplace(s, None, Om, float(rel), exponent, True, trunc)
    v1 = trunc[0] + spec.prefactor * _tail(spec, z, Om) / 1j
    v2 = trunc[1] + spec.prefactor * _tail(spec, z, 2 * Om) / 1j
    rel = float(abs(v2 - v1) / max(abs(v2), np.finfo(float).tiny))
    return KernelLaplace(s, complex(v2), Om, rel, exponent, rel >= DOUBLING_TOL, trunc)


def kernel_at_zero(spec: WwKernelSpec, omega_max: Optional[float] = None) -> float:
    """K(0) = P int_0^omega_max w(omega) d omega by adaptive quadrature."""
    Om = spec.omega_max if omega_max is None else float(omega_max)
    return spec.prefactor * integrate.quad(lambda x: spec.weight(x).real, 0.0, Om, **_QUAD)[0]


def _c_s(x):
    """C(x) = -(e^-x Ei(x) - e^x E1(x))/2 for x > 0, asymptotic beyond 40."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = x > 40.0
    xs = x[~big]
    out[~big] = -0.5 * (np.exp(-xs) * special.expi(xs) - np.exp(xs) * special.exp1(xs))
    xb = x[big]
    acc = np.zeros_like(xb)
    term = 1.0 / xb**2
    for k in range(1, 12, 2):
        acc += term
        term = term * (k + 1) * (k + 2) / xb**2
    out[big] = -acc
    return out


def kernel_time(spec: WwKernelSpec, tau) -> np.ndarray:
    """K(tau) for tau > 0 in closed form.

    Suppressed: P (2/chi_s^2) e^{i w_j tau} [C(c tau) - i (pi/2) e^{-c tau}].
    Flat: cutoff-dependent, P N^2 e^{i w_j tau} int_0^omega_max omega e^{-i omega tau}.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau <= 0):
        raise ValueError("tau must be > 0 (log singularity at 0)")
    if spec.trivial:
        return np.zeros(tau.shape, dtype=complex)
    phase = np.exp(1j * spec.omega_j * tau)
    if spec.profile == "flat":
        a = -1j * tau
        Om = spec.omega_max
        prim = np.exp(a * Om) * (Om / a - 1.0 / a**2) + 1.0 / a**2
        return spec.prefactor * spec.amplitude2 * phase * prim
    x = spec.corner * tau
    return spec.prefactor * (2.0 / spec.chi_s**2) * phase * (_c_s(x) - 0.5j * np.pi * np.exp(-x))


def _moments(spec: WwKernelSpec, h: float, n: int):
    """M0_m = int K, M1_m = int (u - m h) K over [m h, (m+1) h], m < n."""
    M0 = np.empty(n, dtype=complex)
    M1 = np.empty(n, dtype=complex)

    def k_scalar(u):
        return complex(kernel_time(spec, u)[0])

    for m in range(min(n, 2)):
        a = m * h
        M0[m] = _cquad(k_scalar, a, a + h)
        M1[m] = _cquad(lambda u: (u - a) * k_scalar(u), a, a + h)
    if n > 2:
        m = np.arange(2, n)
        x = 0.5 * h * (_GL_NODES[None, :] + 1.0)
        u = m[:, None] * h + x
        K = kernel_time(spec, u.ravel()).reshape(u.shape)
        wts = 0.5 * h * _GL_WEIGHTS
        M0[2:] = K @ wts
        M1[2:] = (K * x) @ wts
    return M0, M1


def _march(spec: WwKernelSpec, h: float, n_steps: int) -> np.ndarray:
    c = np.ones(n_steps + 1, dtype=complex)
    if spec.trivial or n_steps == 0:
        return c
    M0, M1 = _moments(spec, h, n_steps)
    A = M1 / h  # weight on the older node
    B = M0 - A  # weight on the newer node
    I_prev = 0j
    for k in range(1, n_steps + 1):
        # I_k = sum_m A_m c_{k-1-m} + B_m c_{k-m}; B_0 c_k is implicit
        hist = np.dot(A[:k], c[k - 1::-1])
        if k > 1:
            hist += np.dot(B[1:k], c[k - 1:0:-1])
        c[k] = (c[k - 1] - 0.5 * h * (I_prev + hist)) / (1.0 + 0.5 * h * B[0])
        I_prev = hist + B[0] * c[k]
    return c


def decay_amplitude(spec: WwKernelSpec, t_grid, check: bool = False) -> np.ndarray:
    """c_e(t) on a uniform grid starting at t = 0, with c_e(0) = 1.

    ``check=True`` repeats the march with half the step and warns
    (AccuracyWarning) when the two disagree by more than RICHARDSON_TOL.
    """
    if spec.profile == "flat":
        report = kernel_laplace(spec, 1j * spec.omega_j).report()
        raise KernelDivergenceError(report)
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1 or t[0] != 0.0:
        raise ValueError("t_grid must be one-dimensional and start at 0")
    n = t.size - 1
    if n == 0:
        return np.ones(1, dtype=complex)
    h = t[1] - t[0]
    if h <= 0 or not np.allclose(np.diff(t), h, rtol=1e-9, atol=0.0):
        raise ValueError("t_grid must be uniform and increasing")
    c = _march(spec, h, n)
    if check:
        fine = _march(spec, h / 2.0, 2 * n)[::2]
        diff = float(np.max(np.abs(fine - c)))
        if diff > RICHARDSON_TOL:
            suggested = h * math.sqrt(RICHARDSON_TOL / diff)
            warnings.warn(
                f"step-halving difference {diff:.2e} exceeds {RICHARDSON_TOL:g}; try dt <= {suggested:.3g}",
                AccuracyWarning,
                stacklevel=2,
            )
    return c


def laplace_pole(spec: WwKernelSpec, seed: Optional[complex] = None, tol: float = 1e-12, maxiter: int = 60) -> complex:
    """Root of s + K~(s) continued into Re s < 0, by Newton with a central-difference derivative.

    |c_e|^2 decays at rate -2 Re(pole).
    """
    if spec.profile == "flat":
        raise KernelDivergenceError(kernel_laplace(spec, 1j * spec.omega_j).report())
    if spec.trivial:
        return 0j
    Om = spec.omega_max

    def F(s):
        return s + _laplace_full(spec, s, Om, continued=True)

    s = -_laplace_full(spec, ETA, Om) if seed is None else complex(seed)
    for _ in range(maxiter):
        d = 1e-6 * max(1.0, abs(s))
        dF = (F(s + d) - F(s - d)) / (2 * d)
        step = F(s) / dF
        s = s - step
        if abs(step) <= tol * max(1.0, abs(s)):
            return s
    raise RuntimeError("Laplace pole search did not converge")


def markov_rate(spec: WwKernelSpec, amplitude2: Optional[float] = None) -> float:
    """Gamma_sp = gamma chi_s omega_j^2 N^2 / 2 for any amplitude N^2.

    Finite for every profile since only |phi(omega_j)|^2 enters.
    """
    N2 = spec.amplitude2 if amplitude2 is None else float(amplitude2)
    return spec.gamma * spec.chi_s * spec.omega_j**2 * N2 / 2.0
