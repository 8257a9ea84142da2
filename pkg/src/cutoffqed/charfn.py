"""Characteristic function of the reduced qubit dynamics and its poles.

Modal-sum form, with c_n = 4 g_n^2 omega_j omega_n:

    D(s) = s^2 + omega_j^2 - sum_n c_n / (s^2 + 2 kappa_n s + omega_n^2) - T(s)

omega_n are closed-resonator frequencies and kappa_n = -Im of the open
resonances. T(s) accounts for the modes beyond the truncation: modes up to
``tail_factor * N`` are summed explicitly without loss, and the remainder
uses the exact sum rule sum_{n>=0} phi_n(x0)^2 = 1/chi_s, so that
sum_{n>M} c_n/(s^2 + omega_n^2) ~ gamma chi_s omega_j^2 R_M with
R_M = 1/chi_s - 1/(1+chi_s) - sum_{n<=M} phi_n^2. The neglected piece is
O(|s|^2 sum_{n>M} phi_n^2/omega_n^2), i.e. O(M^-3) when chi_s > 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import cc_modes, cf_modes, greens
from .params import CircuitParams, ParameterError

__all__ = [
    "CharacteristicFunction",
    "NoPoleError",
    "PoleCollisionError",
    "PoleConvergenceError",
    "QubitPole",
    "SweepPoint",
    "TruncationError",
    "evaluate",
    "kernel_form",
    "qubit_pole",
    "relative_residual",
    "resonator_poles",
    "sweep_qubit_frequency",
]

RESIDUAL_TOL = 1e-9
DRIFT_TOL = 1e-8
N_MAX = 20000
MAX_ITER = 200


class PoleCollisionError(ZeroDivisionError):
    """Evaluation point coincides with a bare resonator zero."""


class PoleConvergenceError(RuntimeError):
    """Complex Newton failed to converge or to meet the residual bound."""


class NoPoleError(RuntimeError):
    """No qubit-like pole exists in the expected interval (static instability)."""


class TruncationError(RuntimeError):
    """Pole drift under N -> 2N stayed above tolerance up to the cap."""

    def __init__(self, message: str, drift: float, N: int):
        super().__init__(message)
        self.drift = drift
        self.N = N


@dataclass(frozen=True)
class QubitPole:
    p_j: complex
    N_used: int
    residual: float
    weight: float
    drift: Optional[float] = None
    ambiguous: bool = False
    omega_j: float = float("nan")

    @property
    def alpha_j(self) -> float:
        return -self.p_j.real

    @property
    def beta_j(self) -> float:
        return -self.p_j.imag

    @property
    def lamb_shift(self) -> float:
        return self.beta_j - self.omega_j


@dataclass(frozen=True)
class SweepPoint:
    omega_j: float
    alpha_j: float
    beta_j: float
    lamb_shift: float
    N_used: int
    residual: float
    error: Optional[str] = None


@dataclass(frozen=True, eq=False)
class CharacteristicFunction:
    """Immutable truncated D_j(s); build with :meth:`from_params`."""

    params: CircuitParams
    omega_n: np.ndarray
    kappa_n: np.ndarray
    g_n: np.ndarray
    tail_omega: np.ndarray
    tail_g: np.ndarray
    static_remainder: float
    lossless: bool
    tail: bool

    @property
    def omega_j(self) -> float:
        return self.params.omega_j

    @property
    def N(self) -> int:
        return int(self.omega_n.size)

    @property
    def modal_data(self):
        return list(zip(self.omega_n.tolist(), self.kappa_n.tolist(), self.g_n.tolist()))

    @property
    def bare_zeros(self) -> np.ndarray:
        """z_n = -kappa_n - i sqrt(omega_n^2 - kappa_n^2)."""
        return -self.kappa_n - 1j * np.sqrt(self.omega_n**2 - self.kappa_n**2 + 0j)

    @classmethod
    def from_params(cls, params: CircuitParams, N: int, lossless: bool = False, tail: bool = True,
                    tail_factor: int = 4) -> "CharacteristicFunction":
        if int(N) != N or N < 1:
            raise ParameterError("N must be a positive integer")
        N = int(N)
        chi_s = params.chi_s
        use_tail = tail and chi_s > 0 and params.gamma > 0
        M = tail_factor * N if use_tail else N
        table = cc_modes.mode_table(params, M)
        if lossless:
            kappa = np.zeros(N)
        else:
            kappa = -cf_modes.resonance_table(params, N).imag
        if use_tail:
            phi0sq = cc_modes.zero_mode_amplitude(chi_s) ** 2
            R = 1.0 / chi_s - phi0sq - math.fsum(table.phi**2)
            static = params.gamma * chi_s * params.omega_j**2 * R
        else:
            static = 0.0
        return cls(
            params=params,
            omega_n=table.omega[:N],
            kappa_n=kappa,
            g_n=table.g[:N],
            tail_omega=table.omega[N:],
            tail_g=table.g[N:],
            static_remainder=float(static),
            lossless=lossless,
            tail=use_tail,
        )

    def with_omega_j(self, omega_j: float) -> "CharacteristicFunction":
        """Same modes at a different qubit frequency (g_n scales as sqrt(omega_j))."""
        scale = math.sqrt(omega_j / self.omega_j)
        return CharacteristicFunction(
            params=self.params.replace(omega_j=omega_j),
            omega_n=self.omega_n,
            kappa_n=self.kappa_n,
            g_n=self.g_n * scale,
            tail_omega=self.tail_omega,
            tail_g=self.tail_g * scale,
            static_remainder=self.static_remainder * (omega_j / self.omega_j) ** 2,
            lossless=self.lossless,
            tail=self.tail,
        )

    def _scaled_loss(self, mu: float) -> "CharacteristicFunction":
        return CharacteristicFunction(self.params, self.omega_n, mu * self.kappa_n, self.g_n, self.tail_omega,
                                      self.tail_g, self.static_remainder, self.lossless or mu == 0, self.tail)

    def _weights(self):
        wj = self.omega_j
        return 4.0 * self.g_n**2 * wj * self.omega_n, 4.0 * self.tail_g**2 * wj * self.tail_omega

    def __call__(self, s: complex) -> complex:
        return evaluate(self, s)

    def derivative(self, s: complex) -> complex:
        s = complex(s)
        c, ct = self._weights()
        den, dent = _denominators(self, s)
        return complex(2.0 * s + np.sum(c * (2.0 * s + 2.0 * self.kappa_n) / den**2) + np.sum(ct * 2.0 * s / dent**2))

    def secular(self, beta: float) -> float:
        """Lossless D at s = -i beta (real valued)."""
        c, ct = self._weights()
        b2 = beta * beta
        return float(self.omega_j**2 - b2 - np.sum(c / (self.omega_n**2 - b2))
                     - np.sum(ct / (self.tail_omega**2 - b2)) - self.static_remainder)


def _denominators(cf: CharacteristicFunction, s: complex):
    """s^2 + 2 kappa s + omega^2 in factored form, accurate next to a bare zero."""
    z = cf.bare_zeros
    zt = 1j * cf.tail_omega
    return (s - z) * (s + z + 2.0 * cf.kappa_n), (s - zt) * (s + zt)


def evaluate(cf: CharacteristicFunction, s: complex) -> complex:
    """D_j(s) for the truncated modal sum with tail correction."""
    s = complex(s)
    c, ct = cf._weights()
    den, dent = _denominators(cf, s)
    if np.any(den == 0) or np.any(dent == 0):
        raise PoleCollisionError(f"s={s} coincides with a bare resonator zero")
    return complex(s * s + cf.omega_j**2 - np.sum(c / den) - np.sum(ct / dent) - cf.static_remainder)


def relative_residual(cf: CharacteristicFunction, s: complex) -> float:
    """|D_j(s) / (s D_j'(s))|, the relative distance to the nearest root.

    Unlike |D_j| itself this stays meaningful next to a bare resonator zero,
    where D_j is steep and its value is dominated by rounding of s.
    """
    s = complex(s)
    return abs(evaluate(cf, s) / cf.derivative(s)) / max(abs(s), 1e-300)


def _newton(cf: CharacteristicFunction, s0: complex):
    s = complex(s0)
    scale = cf.omega_j**2
    for _ in range(MAX_ITER):
        d = evaluate(cf, s)
        step = d / cf.derivative(s)
        s -= step
        if abs(step) <= 1e-14 * max(abs(s), 1.0) or abs(d) <= 1e-15 * scale:
            break
    else:
        raise PoleConvergenceError(f"Newton did not converge from seed {s0}")
    return s


def _loss_velocity(cf: CharacteristicFunction, mu: float, s: complex) -> complex:
    """dp/dmu for D_mu, the characteristic function with losses mu * kappa_n."""
    c, _ = cf._weights()
    den, _ = _denominators(cf._scaled_loss(mu), s)
    d_mu = complex(np.sum(c * 2.0 * cf.kappa_n * s / den**2))
    return -d_mu / cf._scaled_loss(mu).derivative(s)


def _refine_lossy(cf: CharacteristicFunction, beta0: float, guard: float) -> complex:
    """Carry a lossless root beta0 into the lossy D.

    Direct Newton is accepted when it stays within ``guard`` of the seed;
    otherwise the root is followed in the loss scale mu from 0 to 1 with an
    Euler predictor and Newton corrector, halving the step whenever the
    corrector lands far from the prediction.
    """
    s0 = complex(0.0, -beta0)
    if cf.lossless:
        return _newton(cf, s0)
    try:
        p = _newton(cf, s0)
        if abs(p - s0) < guard:
            return p
    except PoleConvergenceError:
        pass
    mu, p, h = 0.0, s0, 0.1
    while mu < 1.0:
        h = min(h, 1.0 - mu)
        move = h * _loss_velocity(cf, mu, p)
        try:
            q = _newton(cf._scaled_loss(mu + h), p + move)
            ok = abs(q - p - move) <= 0.1 * abs(move) + 1e-13 * abs(p)
        except PoleConvergenceError:
            ok = False
        if ok:
            mu, p = mu + h, q
            h *= 2.0
        else:
            h *= 0.5
            if h < 1e-8:
                raise PoleConvergenceError(f"loss continuation stalled at mu={mu:.3g} from seed {s0}")
    return p


def _coupled_poles(cf: CharacteristicFunction) -> np.ndarray:
    w = np.concatenate([cf.omega_n, cf.tail_omega])
    g = np.concatenate([cf.g_n, cf.tail_g])
    return w[g != 0]


def _interval_root(cf: CharacteristicFunction, lo: float, hi: float) -> float:
    """Root of the secular function strictly inside (lo, hi)."""
    width = hi - lo
    eps = 1e-9
    for _ in range(8):
        a = lo + eps * width if lo > 0 else 0.0
        b = hi - eps * width
        fa, fb = cf.secular(a), cf.secular(b)
        if fa > 0 and fb < 0:
            return float(brentq(cf.secular, a, b, xtol=1e-15, rtol=1e-15, maxiter=500))
        if lo == 0.0 and fa <= 0:
            raise NoPoleError("no qubit-like pole below the first mode: D_j(0) <= 0 (static instability)")
        eps *= 1e-2
    raise NoPoleError(f"secular function has no sign change in ({lo}, {hi})")


def _interval_bounds(poles: np.ndarray, k: int):
    lo = 0.0 if k == 0 else float(poles[k - 1])
    hi = float(poles[k]) if k < poles.size else float(poles[-1]) + 10.0 * np.pi
    return lo, hi


def _pole_in_interval(cf, poles, k) -> tuple[complex, float]:
    lo, hi = _interval_bounds(poles, k)
    beta0 = _interval_root(cf, lo, hi)
    guard = 0.5 * min(beta0 - lo, hi - beta0)
    p = _refine_lossy(cf, beta0, guard)
    weight = abs(2.0 * p / cf.derivative(p))
    return p, weight


def _anchor(cf: CharacteristicFunction) -> float:
    """omega_j sqrt(1 - gamma), the qubit root with only the static term switched on."""
    return cf.omega_j * math.sqrt(1.0 - cf.params.gamma)


def _locate(cf: CharacteristicFunction) -> QubitPole:
    wj = cf.omega_j
    poles = _coupled_poles(cf)
    if poles.size == 0:
        # decoupled: the only zero is the bare qubit
        return QubitPole(complex(0.0, -wj), cf.N, 0.0, 1.0, omega_j=wj)
    anchor = _anchor(cf)
    k = int(np.searchsorted(poles, anchor))
    ambiguous = False
    if k < poles.size and abs(poles[k] - anchor) <= 1e-12 * wj:
        # qubit degenerate with a bare mode: take the branch with more qubit weight
        cands = [_pole_in_interval(cf, poles, kk) for kk in (k, k + 1)]
        cands.sort(key=lambda t: -t[1])
        p, weight = cands[0]
        ambiguous = True
    else:
        p, weight = _pole_in_interval(cf, poles, k)
    res = relative_residual(cf, p)
    if res >= RESIDUAL_TOL:
        raise PoleConvergenceError(f"pole residual {res:.2e} exceeds {RESIDUAL_TOL}")
    return QubitPole(p, cf.N, res, weight, ambiguous=ambiguous, omega_j=wj)


def qubit_pole(cf: CharacteristicFunction, escalate: bool = True, tol: float = DRIFT_TOL,
               N_max: int = N_MAX) -> QubitPole:
    """Qubit-like pole of 1/D_j.

    The pole is labeled by continuity in the coupling. Write the lossless
    D_j(-i beta) as w_j^2 (1 - gamma) - beta^2 + lam [gamma w_j^2 - sum_n
    c_n/(w_n^2 - beta^2)]. For every lam in (0, 1] it is monotone between
    consecutive bare frequencies, so each interval holds exactly one root,
    and as lam -> 0 the root in the interval containing w_j sqrt(1 - gamma)
    tends to w_j sqrt(1 - gamma). That root seeds complex Newton on the
    lossy D_j.

    With ``escalate`` the truncation is doubled from ``cf.N`` until the pole
    moves by less than ``tol * omega_j``; beyond ``N_max`` a
    :class:`TruncationError` is raised.
    """
    if not escalate:
        return _locate(cf)
    wj = cf.omega_j
    params = cf.params
    try:
        prev = _locate(cf)
    except NoPoleError as exc:
        # a divergent modal sum drives D_j(0) negative as N grows
        raise TruncationError(f"no stable qubit pole at N={cf.N}: {exc}", float("inf"), cf.N) from exc
    N = cf.N
    drift = float("inf")
    while 2 * N <= N_max:
        N *= 2
        nxt = CharacteristicFunction.from_params(params, N, lossless=cf.lossless, tail=cf.tail)
        try:
            cur = _locate(nxt)
        except NoPoleError as exc:
            raise TruncationError(f"qubit pole lost at N={N}: {exc}", float("inf"), N) from exc
        drift = abs(cur.p_j - prev.p_j)
        if drift < tol * wj:
            return QubitPole(cur.p_j, N, cur.residual, cur.weight, drift, cur.ambiguous, wj)
        prev = cur
    raise TruncationError(
        f"pole drift {drift:.3e} exceeds {tol:.1e}*omega_j at the cap N={N}", drift, N)


def resonator_poles(cf: CharacteristicFunction, M: int) -> list[complex]:
    """Resonator-like poles p_1..p_M (lower half-plane).

    Resonator n sits in the interval below its bare frequency if it lies
    below the qubit, and above it otherwise.
    """
    M = min(int(M), cf.N)
    if M < 1:
        raise ParameterError("M must be >= 1")
    z = cf.bare_zeros
    poles = _coupled_poles(cf)
    if poles.size == 0:
        return [complex(v) for v in z[:M]]
    qp = _locate(cf)
    kq = int(np.searchsorted(poles, _anchor(cf)))
    out = []
    for n in range(1, M + 1):
        if cf.g_n[n - 1] == 0:
            out.append(complex(z[n - 1]))
            continue
        idx = int(np.searchsorted(poles, cf.omega_n[n - 1]))  # position of this pole
        k = idx if idx < kq else idx + 1
        p, _ = _pole_in_interval(cf, poles, k)
        if abs(p - qp.p_j) < 1e-9:
            raise PoleConvergenceError(f"resonator pole n={n} coincides with the qubit pole")
        res = relative_residual(cf, p)
        if res >= RESIDUAL_TOL:
            raise PoleConvergenceError(f"resonator pole n={n} residual {res:.2e}")
        out.append(p)
    return out


def kernel_form(params: CircuitParams, s: complex) -> complex:
    """D_j(s) rebuilt from the Green's function at w = i s.

    s^2 + omega_j^2 [1 - gamma + gamma chi_s w^2 G(x0, x0, w)], the static
    term being fixed by the sum rule for the mode amplitudes.
    """
    s = complex(s)
    k2 = greens.kernel_K(params, 2, [1j * s])[0]
    return s * s + params.omega_j**2 * (1.0 - params.gamma + k2)


def _sweep_point(args) -> SweepPoint:
    cf, wj, escalate = args
    try:
        local = cf.with_omega_j(wj)
        qp = qubit_pole(local, escalate=escalate)
        return SweepPoint(wj, qp.alpha_j, qp.beta_j, qp.lamb_shift, qp.N_used, qp.residual)
    except (NoPoleError, PoleConvergenceError, PoleCollisionError, TruncationError) as exc:
        nan = float("nan")
        return SweepPoint(wj, nan, nan, nan, cf.N, nan, f"{type(exc).__name__}: {exc}")


def sweep_qubit_frequency(params: CircuitParams, omega_j_grid: Sequence[float], N: int = 2000,
                          jobs: int = 1, escalate: bool = False, lossless: bool = False) -> list[SweepPoint]:
    """Qubit pole across a grid of omega_j; failures are recorded per point.

    Every point is seeded from its own secular root, so serial and parallel
    runs return identical tables.
    """
    grid = [float(w) for w in omega_j_grid]
    if not grid:
        raise ValueError("omega_j grid is empty")
    if any(w <= 0 for w in grid):
        raise ValueError("omega_j values must be positive")
    cf = CharacteristicFunction.from_params(params, N, lossless=lossless)
    tasks = [(cf, w, escalate) for w in grid]
    if jobs == 1 or len(grid) == 1:
        return [_sweep_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
