import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cutoffqed import cf_modes
from cutoffqed.params import CircuitParams

# (nu_n, kappa_n) frozen from a 30-digit solve, chi_R = chi_L = 1e-3, x0 = 0
ORACLE = {
    0.0: [(3.1353220913483845286, 1.9620862525431480814e-5), (6.2706446733172270432, 7.8478852293234391396e-5)],
    None: [(3.1322574490720978814, 1.9563104310951195602e-5), (6.2645158014367537386, 7.8244503751123519363e-5)],
}


@pytest.mark.parametrize("override", [0.0, None])
def test_first_resonances(override):
    p = CircuitParams(chi_s_override=override)
    res = cf_modes.resonances(p, 2)
    for r, (nu, kappa) in zip(res[1:], ORACLE[override]):
        assert r.nu_n == pytest.approx(nu, rel=1e-12)
        assert r.kappa_n == pytest.approx(kappa, rel=1e-9)


def test_closed_limit_matches_cc():
    from cutoffqed import cc_modes
    p = CircuitParams(chi_R=0.0, chi_L=0.0, chi_s_override=0.02)
    w = cf_modes.resonance_table(p, 20)
    np.testing.assert_array_equal(w.imag, 0.0)
    np.testing.assert_allclose(w.real, cc_modes.eigenfrequencies(p, 20), rtol=1e-14)


def test_zero_entry_and_residuals():
    res = cf_modes.resonances(CircuitParams(), 50)
    assert res[0].n == 0 and res[0].nu_n == 0.0 and res[0].kappa_n >= 0.0
    assert max(r.residual for r in res[1:]) < 1e-9


def test_root_count_matches_table():
    p = CircuitParams()
    w = cf_modes.resonance_table(p, 3)
    n = cf_modes.count_roots(p, 1.0, 0.5 * (w[2].real + w[1].real), -0.01, -1e-7)
    assert n == 2


def test_invalid_N():
    with pytest.raises(ValueError):
        cf_modes.resonance_table(CircuitParams(), 0)


@settings(max_examples=15)
@given(chi=st.floats(1e-4, 1e-2), chi_s=st.floats(0.0, 0.1))
def test_lower_half_plane_and_ordered(chi, chi_s):
    p = CircuitParams(chi_R=chi, chi_L=chi, chi_s_override=chi_s)
    w = cf_modes.resonance_table(p, 40)
    assert np.all(w.imag < 0)
    assert np.all(np.diff(w.real) > 0)
    assert np.max(cf_modes.scaled_residual(w, chi, chi, chi_s, 0.0)) < 1e-9
