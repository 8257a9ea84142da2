"""Lossless normal modes of the coupled qubit-resonator system and the
leading anharmonic shift of the qubit-like frequency.

Bare quadratures obey [X, Y] = 2i with H = sum_l omega_l (X_l^2 + Y_l^2)/4
+ sum_n g_n Y_j Y_n, giving X'' = -A X with A = [[w_j^2, 2 g_n w_n],
[2 g_n w_j, w_n^2]]. In Z = sqrt(omega) X the matrix becomes the symmetric
S = Omega^(1/2) A Omega^(-1/2), with off-diagonal 2 g_n sqrt(w_j w_n).
With S = O diag(beta^2) O^T the canonical map is

    X = T Xbar,  Y = T^(-T) Ybar,   T = Omega^(-1/2) O diag(beta^(1/2)),

so X_j = sum_k u_k Xbar_k with u_k = O_jk sqrt(beta_k / omega_j).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import cc_modes
from .params import CircuitParams, ParameterError

__all__ = [
    "BareState",
    "HybridizedSpectrum",
    "InstabilityError",
    "MsptCorrection",
    "diagonalize",
    "mspt_correction",
]

AMBIGUITY_RATIO = 0.9


class InstabilityError(RuntimeError):
    """The coupled system has a non-positive normal-mode frequency."""


@dataclass(frozen=True, eq=False)
class HybridizedSpectrum:
    """Normal modes; index 0 of the bare basis is the qubit.

    ``beta`` and ``u`` run over all N+1 normal modes in ascending frequency.
    ``qubit_index`` marks the qubit-like one, labeled by continuity in the
    coupling (the same rule as the characteristic-function poles);
    ``max_overlap_index`` is the branch with the largest bare-qubit overlap
    and ``ambiguous`` is set when the two differ or nearly tie. ``overlap``
    holds O_jk^2, the squared eigenvector components on the bare qubit axis,
    which sum to one.
    """

    omega: np.ndarray  # bare frequencies, qubit first
    beta: np.ndarray
    eigenvectors: np.ndarray  # columns O[:, k]
    qubit_index: int
    ambiguous: bool
    max_overlap_index: int = -1

    @property
    def beta_j(self) -> float:
        return float(self.beta[self.qubit_index])

    @property
    def beta_n(self) -> np.ndarray:
        return np.delete(self.beta, self.qubit_index)

    @property
    def u(self) -> np.ndarray:
        return self.eigenvectors[0] * np.sqrt(self.beta / self.omega[0])

    @property
    def u_j(self) -> float:
        return float(self.u[self.qubit_index])

    @property
    def u_n(self) -> np.ndarray:
        return np.delete(self.u, self.qubit_index)

    @property
    def overlap(self) -> np.ndarray:
        return self.eigenvectors[0] ** 2

    @property
    def transform(self) -> np.ndarray:
        """T with X = T Xbar."""
        return (self.eigenvectors * np.sqrt(self.beta)[None, :]) / np.sqrt(self.omega)[:, None]

    @property
    def inverse_transform(self) -> np.ndarray:
        """T^-1 = diag(beta^-1/2) O^T Omega^1/2."""
        return (self.eigenvectors.T * np.sqrt(self.omega)[None, :]) / np.sqrt(self.beta)[:, None]


def _dynamical_matrix(params: CircuitParams, N: int):
    table = cc_modes.mode_table(params, N)
    wj = params.omega_j
    omega = np.concatenate([[wj], table.omega])
    S = np.diag(omega**2)
    off = 2.0 * table.g * np.sqrt(wj * table.omega)
    S[0, 1:] = off
    S[1:, 0] = off
    return omega, S


def diagonalize(params: CircuitParams, N: int) -> HybridizedSpectrum:
    """Lossless normal modes with N resonator modes."""
    if int(N) != N or N < 1:
        raise ParameterError("N must be a positive integer")
    omega, S = _dynamical_matrix(params, int(N))
    lam, O = np.linalg.eigh(S)
    if lam[0] <= 0:
        raise InstabilityError(f"non-positive squared normal-mode frequency {lam[0]:.3e}")
    # Cauchy interlacing with the resonator block
    d = omega[1:] ** 2
    tol = 1e-9 * lam[-1]
    if np.any(lam[:-1] > d + tol) or np.any(lam[1:] < d - tol):
        raise RuntimeError("normal-mode spectrum violates interlacing with the bare resonator modes")
    O = O * np.sign(O[0] + (O[0] == 0))[None, :]
    beta = np.sqrt(lam)
    ov = O[0] ** 2
    k_overlap = int(np.argmax(ov))
    k = _continuity_index(params, omega, S[0, 1:], beta, ov)
    second = np.partition(ov, -2)[-2] if ov.size > 1 else 0.0
    return HybridizedSpectrum(
        omega=omega,
        beta=beta,
        eigenvectors=O,
        qubit_index=k,
        ambiguous=bool(k != k_overlap or second >= AMBIGUITY_RATIO * ov[k_overlap]),
        max_overlap_index=k_overlap,
    )


def _continuity_index(params, omega, off, beta, ov) -> int:
    """Branch connected to omega_j sqrt(1 - gamma) as the couplings switch on.

    Each interval between consecutive coupled resonator frequencies holds one
    normal mode; the qubit branch is the one in the interval containing the
    statically renormalized qubit. Ties at a bare frequency go to the larger
    overlap.
    """
    coupled = np.sort(omega[1:][off != 0])
    if coupled.size == 0:
        return int(np.argmax(ov))
    anchor = omega[0] * np.sqrt(1.0 - params.gamma)
    i = int(np.searchsorted(coupled, anchor))
    lo = coupled[i - 1] if i > 0 else 0.0
    hi = coupled[i] if i < coupled.size else np.inf
    if i < coupled.size and abs(hi - anchor) <= 1e-12 * omega[0]:
        hi = coupled[i + 1] if i + 1 < coupled.size else np.inf
    tol = 1e-12 * beta[-1]
    cand = np.flatnonzero((beta > lo + tol) & (beta < hi - tol))
    if cand.size == 0:
        return int(np.argmax(ov))
    return int(cand[np.argmax(ov[cand])])


@dataclass(frozen=True, eq=False)
class BareState:
    """Second moments <X X^T>, <Y Y^T> of the bare quadratures (qubit first)."""

    xx: np.ndarray
    yy: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        for name in ("xx", "yy"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be a square matrix")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"{name} has undefined (non-finite) second moments")
            if not np.allclose(m, m.T, rtol=1e-12, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
            if np.any(np.diag(m) < 0):
                raise ValueError(f"{name} has negative diagonal second moments")
        if np.shape(self.xx) != np.shape(self.yy):
            raise ValueError("xx and yy must have the same shape")

    @classmethod
    def superposition_vacuum(cls, n_modes: int) -> "BareState":
        """(|0> + |1>)/sqrt(2) for the qubit, vacuum for every resonator mode."""
        return cls.thermal(n_modes, 0.0)

    @classmethod
    def thermal(cls, n_modes: int, occupation: float) -> "BareState":
        """Qubit in (|0> + |1>)/sqrt(2); each resonator mode thermal with the given mean occupation."""
        if occupation < 0:
            raise ValueError("occupation must be >= 0")
        diag = np.full(n_modes + 1, 2.0 * occupation + 1.0)
        diag[0] = 2.0
        label = "superposition+vacuum" if occupation == 0 else f"superposition+thermal(n={occupation:g})"
        return cls(np.diag(diag), np.diag(diag.copy()), label)


@dataclass(frozen=True)
class MsptCorrection:
    beta_j: float
    beta_j_corrected: float
    correction: float
    state_descriptor: str
    include_vacuum: bool
    H_expectation: Optional[np.ndarray] = field(default=None, repr=False)


def mspt_correction(spectrum: HybridizedSpectrum, params: CircuitParams, state: Optional[BareState] = None,
                    include_vacuum: bool = True) -> MsptCorrection:
    """Leading anharmonic correction to the qubit-like frequency.

    beta_j - (sqrt(2) eps / 4) omega_j [u_j^4 <H_j> + sum_n 2 u_j^2 u_n^2 <H_n>]
    with <H_l> = (<Xbar_l^2> + <Ybar_l^2>)/4. ``include_vacuum=False`` drops
    the zero-point 1/2 from each resonator-like <H_n>.
    """
    size = spectrum.omega.size
    if state is None:
        state = BareState.superposition_vacuum(size - 1)
    xx = np.asarray(state.xx, dtype=float)
    yy = np.asarray(state.yy, dtype=float)
    if xx.shape != (size, size):
        raise ValueError(f"state covers {xx.shape[0]} modes, spectrum has {size}")
    T = spectrum.transform
    Tinv = spectrum.inverse_transform
    xbar2 = np.einsum("ka,ab,kb->k", Tinv, xx, Tinv)
    ybar2 = np.einsum("ak,ab,bk->k", T, yy, T)
    H = 0.25 * (xbar2 + ybar2)
    k = spectrum.qubit_index
    u = spectrum.u
    Hn = np.delete(H, k)
    if not include_vacuum:
        Hn = Hn - 0.5
    un = np.delete(u, k)
    bracket = u[k] ** 4 * H[k] + np.sum(2.0 * u[k] ** 2 * un**2 * Hn)
    corr = -np.sqrt(2.0) * params.epsilon / 4.0 * params.omega_j * bracket
    return MsptCorrection(
        beta_j=spectrum.beta_j,
        beta_j_corrected=float(spectrum.beta_j + corr),
        correction=float(corr),
        state_descriptor=state.label,
        include_vacuum=include_vacuum,
        H_expectation=H,
    )
