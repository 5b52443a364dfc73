import numpy as np
import pytest
from hypothesis import given, strategies as st

from lselab.grid import GridMeasureData, GridSpec, spectral_derivative
from lselab.lattice import Region
from lselab.potential import INTERIOR, LocalEnergy, chain_family


def site_grid(single_site, nodes=64, scheme="fd", width=None):
    e = LocalEnergy(single_site, Region.interval(0, 0), INTERIOR)
    spec = GridSpec.default(1, 2.0, nodes=nodes) if width is None else GridSpec((0.0,), (width,), (nodes,))
    return GridMeasureData(e, spec, scheme=scheme)


def test_weights_normalised_and_tails_small(single_site):
    gm = site_grid(single_site, 128, "spectral")
    assert gm.w.sum() == pytest.approx(1.0, abs=1e-14)
    assert gm.w[:2].sum() + gm.w[-2:].sum() < 1e-10


def test_domain_too_small(single_site):
    with pytest.raises(ValueError, match="domain too small"):
        site_grid(single_site, 64, width=2.0)


def test_log_norm_is_gaussian_integral(single_site):
    assert site_grid(single_site, 128).log_norm == pytest.approx(0.5 * np.log(np.pi), abs=1e-12)


@pytest.mark.parametrize("scheme", ["fd", "spectral"])
def test_generator_is_symmetric(single_site, scheme):
    gm = site_grid(single_site, 64, scheme)
    rng = np.random.default_rng(0)
    f, g = rng.normal(size=64), rng.normal(size=64)
    lhs = gm.expect(f * gm.generator_apply(g))
    rhs = gm.expect(g * gm.generator_apply(f))
    assert abs(lhs - rhs) < 1e-12


def test_generator_kills_constants(single_site):
    gm = site_grid(single_site, 64, "fd")
    np.testing.assert_allclose(gm.generator_apply(np.ones(64)), 0.0, atol=1e-12)


def test_generator_on_linear_function_second_order(single_site):
    errs = []
    for M in (64, 128):
        gm = site_grid(single_site, M, "fd")
        x = gm.x[..., 0]
        Lx = gm.generator_apply(x)
        inner = np.abs(x) < 2.0
        errs.append(np.abs(Lx + 2 * x)[inner].max())
    assert errs[1] < errs[0] / 3.5


def test_spectral_generator_on_linear_function(single_site):
    gm = site_grid(single_site, 128, "spectral")
    x = gm.x[..., 0]
    inner = np.abs(x) < 3.0
    np.testing.assert_allclose(gm.generator_apply(x)[inner], -2 * x[inner], atol=1e-8)


def test_dirichlet_form_of_linear_function(single_site):
    gm = site_grid(single_site, 128, "spectral")
    assert gm.dirichlet(gm.x[..., 0]) == pytest.approx(1.0, rel=1e-10)


def test_mismatched_grids(single_site):
    gm = site_grid(single_site, 64)
    with pytest.raises(ValueError, match="mismatched grids"):
        gm.to_psi(np.ones(32))


def test_two_site_grid_matches_covariance(chain):
    e = LocalEnergy(chain, Region.interval(0, 1), INTERIOR)
    gm = GridMeasureData(e, GridSpec.default(2, 2.0))
    x0, x1 = gm.x[..., 0], gm.x[..., 1]
    cov = np.linalg.inv(2 * np.array([[1, 0.2], [0.2, 1]]))
    assert gm.expect(x0 * x1) == pytest.approx(cov[0, 1], abs=1e-12)
    assert gm.expect(x0 * x0) == pytest.approx(cov[0, 0], abs=1e-12)


@given(st.integers(8, 64).filter(lambda m: m % 2 == 0), st.floats(0.05, 1.0))
def test_spectral_derivative_antisymmetric(M, h):
    D = spectral_derivative(M, h)
    np.testing.assert_allclose(D, -D.T, atol=1e-12)


def test_spectral_derivative_exact_on_fourier_mode():
    M, X = 32, np.pi
    h = 2 * X / M
    x = -X + h * np.arange(M)
    D = spectral_derivative(M, h)
    np.testing.assert_allclose(D @ np.sin(3 * x), 3 * np.cos(3 * x), atol=1e-12)


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec((0.0,), (1.0,), (2,))
    with pytest.raises(ValueError):
        GridSpec.default(4, 2.0)
