import numpy as np
import pytest
from hypothesis import given, strategies as st

from lselab.solitons import (free_gausson, gausson_residual, harmonic_gausson, harmonic_identity_error,
                             harmonic_width, soliton_grid, stated_harmonic_amplitude, stated_harmonic_energy,
                             stationarity_check, write_report)


def test_free_gausson_unit_amplitude():
    g = free_gausson(-1.0, 1, 1.0)
    assert g.E == pytest.approx(1.0)
    assert g(np.array([[0.0], [1.0]])) == pytest.approx([1.0, np.exp(-0.5)])


def test_free_gausson_scaled_amplitude():
    assert free_gausson(-1.0, 1, np.e).E == pytest.approx(-1.0)


@pytest.mark.parametrize("lam", [0.0, 0.5])
def test_free_gausson_needs_focusing(lam):
    with pytest.raises(ValueError, match="not normalizable"):
        free_gausson(lam)


def test_harmonic_width_example():
    assert harmonic_width(2.0, 1.0) == pytest.approx(1.0)


def test_harmonic_width_free_limit():
    assert harmonic_width(1e-12, -0.7) == pytest.approx(0.7, rel=1e-9)


@given(st.floats(0.01, 50.0), st.floats(-5.0, 5.0))
def test_harmonic_identity(a, lam):
    assert harmonic_identity_error(a, lam) < 1e-12 * max(1.0, a)


def test_free_residual_small():
    assert gausson_residual(free_gausson(-1.0)) < 1e-6


def test_wrong_eigenvalue_residual_order_one():
    g = free_gausson(-1.0)
    assert gausson_residual(g, E=g.E + 1) == pytest.approx(1.0, rel=1e-3)


def test_harmonic_two_dimensional_residual():
    g = harmonic_gausson([2.0, 1.0], 1.0)
    assert gausson_residual(g, soliton_grid(2, 10.0, 128)) < 1e-5


@pytest.mark.parametrize("n", [1, 2])
def test_free_residual_any_dimension(n):
    spec = soliton_grid(n, 10.0, 256 if n == 1 else 96)
    assert gausson_residual(free_gausson(-1.0, n, 1.3), spec) < 1e-6


def test_phase_rotates_at_minus_E():
    rep = stationarity_check(free_gausson(-1.0), T=1.0)
    assert rep.passed()
    assert rep.E_fitted == pytest.approx(1.0, abs=1e-4)


def test_scaling_shifts_phase_rate():
    e1 = stationarity_check(free_gausson(-1.0, 1, 1.0)).E_fitted
    e2 = stationarity_check(free_gausson(-1.0, 1, 2.0)).E_fitted
    assert e2 - e1 == pytest.approx(-1.0 * np.log(4.0), abs=1e-4)


def test_wrong_E_fails_with_reported_slope():
    g = free_gausson(-1.0)
    rep = stationarity_check(g, T=0.5, E=g.E + 0.1)
    assert not rep.passed()
    assert rep.E_fitted == pytest.approx(g.E, abs=1e-4)


def test_stated_harmonic_energy_consistent():
    g = harmonic_gausson([2.0, 3.0], 0.7)
    b = stated_harmonic_amplitude(g)
    assert harmonic_gausson([2.0, 3.0], 0.7, b).E == pytest.approx(stated_harmonic_energy(g), abs=1e-12)


def test_l2_normaliser():
    g = free_gausson(-1.0, 2)
    spec = soliton_grid(2, 10.0, 64)
    gn = free_gausson(-1.0, 2, g.l2_normalizer())
    assert np.sum(gn(spec.mesh()) ** 2) * np.prod(spec.h) == pytest.approx(1.0, rel=1e-12)


def test_report_format(tmp_path):
    write_report(tmp_path / "r.csv", [("free", -1.0, 1, 1.0, 1.0, 1.0, 1e-13, True)])
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "case,lambda,n,b,E_formula,E_fitted,residual,pass"
    assert lines[1].endswith(",1")
