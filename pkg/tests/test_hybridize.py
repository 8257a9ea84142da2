import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cutoffqed import cc_modes, hybridize
from cutoffqed.params import CircuitParams, ParameterError


def test_two_mode_analytic():
    p = CircuitParams(chi_g=0.05, omega_j=2.9)
    m = cc_modes.modes(p, 1)[0]
    a, b = p.omega_j**2, m.omega_n**2
    off = 2 * m.g_n * np.sqrt(p.omega_j * m.omega_n)
    lam = 0.5 * (a + b) + np.array([-1, 1]) * np.sqrt(0.25 * (a - b) ** 2 + off**2)
    spec = hybridize.diagonalize(p, 1)
    np.testing.assert_allclose(spec.beta, np.sqrt(lam), rtol=1e-14)


def test_duffing_limit_and_zero_nonlinearity():
    free = CircuitParams(chi_g=0.0, omega_j=2.0, epsilon=0.1)
    m = hybridize.mspt_correction(hybridize.diagonalize(free, 20), free)
    assert m.beta_j_corrected == pytest.approx(2.0 * (1 - np.sqrt(2) * 0.1 / 4), abs=1e-12)
    linear = CircuitParams(chi_g=0.05, epsilon=0.0)
    m0 = hybridize.mspt_correction(hybridize.diagonalize(linear, 50), linear)
    assert m0.correction == 0.0 and m0.beta_j_corrected == m0.beta_j


def test_transform_diagonalizes_dynamics():
    p = CircuitParams(chi_g=0.05, omega_j=2.5)
    spec = hybridize.diagonalize(p, 30)
    omega, S = hybridize._dynamical_matrix(p, 30)
    A = np.diag(omega**-0.5) @ S @ np.diag(omega**0.5)  # X'' = -A X
    T, Tinv = spec.transform, spec.inverse_transform
    np.testing.assert_allclose(Tinv @ T, np.eye(31), atol=1e-12)
    np.testing.assert_allclose(Tinv @ A @ T, np.diag(spec.beta**2), atol=1e-10 * spec.beta[-1] ** 2)


def test_thermal_occupation_deepens_shift():
    p = CircuitParams(chi_g=0.05, omega_j=2.5)
    spec = hybridize.diagonalize(p, 30)
    shifts = [hybridize.mspt_correction(spec, p, hybridize.BareState.thermal(30, n)).correction
              for n in (0.0, 0.5, 2.0)]
    assert shifts[0] < 0 and shifts[0] > shifts[1] > shifts[2]


def test_vacuum_convention():
    p = CircuitParams(chi_g=0.05, omega_j=2.5)
    spec = hybridize.diagonalize(p, 30)
    with_vac = hybridize.mspt_correction(spec, p)
    without = hybridize.mspt_correction(spec, p, include_vacuum=False)
    assert without.correction > with_vac.correction
    assert not without.include_vacuum


def test_state_validation():
    with pytest.raises(ValueError):
        hybridize.BareState(np.eye(2), np.ones((2, 3)))
    with pytest.raises(ValueError):
        hybridize.BareState(np.array([[1.0, 0.5], [0.0, 1.0]]), np.eye(2))
    with pytest.raises(ValueError):
        hybridize.BareState(np.diag([1.0, np.inf]), np.eye(2))
    with pytest.raises(ValueError):
        hybridize.BareState.thermal(3, -1.0)
    p = CircuitParams()
    with pytest.raises(ValueError):
        hybridize.mspt_correction(hybridize.diagonalize(p, 5), p, hybridize.BareState.thermal(3, 0.0))


def test_instability_without_series_capacitance():
    p = CircuitParams(chi_g=0.1, chi_j=0.05, chi_s_override=0.0)
    with pytest.raises(hybridize.InstabilityError):
        hybridize.diagonalize(p, 50)
    with pytest.raises(ParameterError):
        hybridize.diagonalize(p, 0)


@settings(max_examples=25)
@given(chi_g=st.floats(1e-3, 0.2), omega_j=st.floats(0.5, 12.0), N=st.integers(1, 60))
def test_spectrum_invariants(chi_g, omega_j, N):
    p = CircuitParams(chi_g=chi_g, omega_j=omega_j)
    spec = hybridize.diagonalize(p, N)
    assert np.all(spec.beta > 0) and np.all(np.diff(spec.beta) >= 0)
    assert spec.overlap.sum() == pytest.approx(1.0, abs=1e-12)
    O = spec.eigenvectors
    np.testing.assert_allclose(O.T @ O, np.eye(N + 1), atol=1e-11)
    assert spec.beta_n.size == N and spec.u_n.size == N
    # the qubit branch sits between the bare frequencies bracketing omega_j sqrt(1 - gamma)
    bare = np.concatenate([[0.0], spec.omega[1:], [np.inf]])
    k = np.searchsorted(bare, omega_j * np.sqrt(1 - p.gamma))
    assert bare[k - 1] <= spec.beta_j <= bare[k]
