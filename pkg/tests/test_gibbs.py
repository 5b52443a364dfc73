import numpy as np
import pytest
from hypothesis import given, strategies as st

from lselab.gaussian import QuadExp, QuadPoly
from lselab.gibbs import (LocalFunction, LocalGibbsMeasure, check_dlr, check_sgi_from_lsi,
                          conditional_expectation, density_ratio_bound, density_ratio_constant, herbst_check,
                          lsi_coefficient_BE, lsi_ratio, mixing_decay, spectral_gap_coefficient)
from lselab.lattice import Region
from lselab.mcmc import McmcConfig
from lselab.potential import INTERIOR, BoundaryCondition, InteractionFamily, chain_family, cos_sum

X0 = (0,)


def site_measure(fam, backend="gaussian"):
    return LocalGibbsMeasure(fam, Region.interval(0, 0), INTERIOR, backend)


def test_site_moments(single_site):
    m = site_measure(single_site)
    assert m.expect(QuadPoly.coordinate(X0)) == pytest.approx(0.0)
    assert m.expect(QuadPoly.coordinate(X0, 2)) == pytest.approx(0.5)
    assert m.expect(1.0) == pytest.approx(1.0)


def test_grid_and_gaussian_backends_agree(chain):
    r = Region.interval(0, 1)
    g = LocalGibbsMeasure(chain, r, BoundaryCondition({-1: 0.5}), "gaussian")
    q = LocalGibbsMeasure(chain, r, BoundaryCondition({-1: 0.5}), "grid")
    f = QuadExp(((0,), (1,)), [[0.3, 0.1], [0.1, 0.2]], [0.4, -0.2])
    assert q.expect(f) == pytest.approx(g.expect(f), rel=1e-10)
    assert q.entropy(f) == pytest.approx(g.entropy(f), rel=1e-8)
    assert q.dirichlet(f) == pytest.approx(g.dirichlet(f), rel=1e-8)


def test_entropy_of_constant_is_zero(single_site):
    assert site_measure(single_site).entropy(QuadExp.constant(2.0)) == pytest.approx(0.0, abs=1e-14)
    assert site_measure(single_site, "grid").entropy(lambda x: np.full(x.shape[:-1], 3.0)) == pytest.approx(0.0, abs=1e-12)


@given(st.floats(-2.0, 2.0))
def test_entropy_of_exponential(t):
    m = site_measure(InteractionFamily(d=1, R=1, diag=1.0))
    f = QuadExp.exp_affine([X0], [t])
    mass = float(np.real(m.expect(f.abs2())))
    assert m.entropy(f) / mass == pytest.approx(2 * t * t * 0.5, rel=1e-10, abs=1e-14)


def test_entropy_smooth_bump_against_refined_grid(single_site):
    bump = lambda x: 1.0 / (1.0 + x[..., 0] ** 2)  # noqa: E731
    coarse = site_measure(single_site, "grid").entropy(bump)
    from lselab.grid import GridSpec
    fine = LocalGibbsMeasure(single_site, Region.interval(0, 0), INTERIOR, "grid",
                             grid_spec=GridSpec.default(1, 2.0, nodes=1024)).entropy(bump)
    assert coarse == pytest.approx(fine, abs=1e-6)


def test_bakry_emery_single_site(single_site):
    assert lsi_coefficient_BE(single_site) == pytest.approx(1.0)


@given(st.floats(0.1, 10.0))
def test_bakry_emery_homogeneity(s):
    assert lsi_coefficient_BE(InteractionFamily(d=1, R=1, diag=s)) == pytest.approx(1.0 / s)


def test_bakry_emery_inapplicable():
    with pytest.raises(ValueError, match="Bakry–Émery inapplicable"):
        lsi_coefficient_BE(InteractionFamily(d=1, R=1, diag=0.1, bonds={(1,): 0.5}))


@pytest.mark.parametrize("t", [0.1, 0.7, 2.0])
def test_lsi_ratio_gaussian_equality(single_site, t):
    m = site_measure(single_site)
    assert lsi_ratio(m, QuadExp.exp_affine([X0], [t])) == pytest.approx(lsi_coefficient_BE(single_site), rel=1e-10)


def test_lsi_ratio_below_coefficient_off_equality_family(single_site):
    m = site_measure(single_site)
    f = QuadExp([X0], [[0.6]], [0.4])
    assert lsi_ratio(m, f) < lsi_coefficient_BE(single_site)


def test_rothaus_equality_on_linear_function(single_site):
    m = site_measure(single_site)
    c = lsi_coefficient_BE(single_site)
    row = check_sgi_from_lsi(m, c, {"x": QuadPoly.coordinate(X0)})[0]
    assert abs(row.lhs - row.rhs) < 1e-8
    assert spectral_gap_coefficient(m) == pytest.approx(0.5 * c, abs=1e-8)


def test_rothaus_constant(single_site):
    m = site_measure(single_site)
    row = check_sgi_from_lsi(m, 1.0, {"1": QuadPoly((X0,), [[0.0]], [0.0], 1.0)})[0]
    assert row.lhs == pytest.approx(0.0, abs=1e-15) and row.rhs == 0.0


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_spectral_gap_inequality_on_grid(coef):
    fam = InteractionFamily(d=1, R=1, diag=1.0)
    m = site_measure(fam, "grid")
    poly = lambda x: np.polyval(coef, x[..., 0])  # noqa: E731
    row = check_sgi_from_lsi(m, lsi_coefficient_BE(fam), {"p": poly})[0]
    assert row.passed(1e-10)


def test_conditional_expectation_locality(chain):
    amb = LocalGibbsMeasure(chain, Region.interval(-10, 10), BoundaryCondition(), "gaussian")
    f = QuadPoly.coordinate((8,), 2)
    assert conditional_expectation(amb, Region.interval(-2, 2), f) is f


def test_dlr_chain(chain):
    amb = LocalGibbsMeasure(chain, Region.interval(-16, 16), BoundaryCondition(), "gaussian")
    res, ok = check_dlr(amb, Region.interval(-1, 1), QuadPoly.coordinate(X0, 2))
    assert ok and res < 1e-10


def test_dlr_unsupported_integrand(chain):
    amb = LocalGibbsMeasure(chain, Region.interval(-4, 4), BoundaryCondition(), "gaussian")
    with pytest.raises(ValueError, match="unsupported integrand class"):
        conditional_expectation(amb, Region.interval(0, 0), LocalFunction([X0], np.sin))


def test_dlr_on_sampling_backend(chain):
    box = Region.interval(0, 2)
    exact = LocalGibbsMeasure(chain, box, BoundaryCondition(), "gaussian")
    mc = LocalGibbsMeasure(chain, box, BoundaryCondition(), "mcmc", mcmc=McmcConfig(samples=4000, seed=5))
    f = QuadPoly.coordinate((1,), 2)
    g = conditional_expectation(exact, Region.interval(1, 1), f)
    est_g, est_f = mc.expect(g), mc.expect(f)
    se = np.hypot(est_g.stderr, est_f.stderr)
    assert abs(est_g.value - exact.expect(f).real) < 3 * est_g.stderr + 1e-3
    assert abs(est_g.value - est_f.value) < 3 * se + 1e-3


def test_herbst_doubled_site():
    m = LocalGibbsMeasure(InteractionFamily(d=1, R=1, diag=1.0), Region.interval(0, 1), INTERIOR, "gaussian")
    g = QuadPoly([(0,), (1,)], [[1.0, -1.0], [-1.0, 1.0]], [0.0, 0.0])
    r = herbst_check(m, g, 8.0, 1.0 / 16, 1.0)
    assert r.passed(1e-8)


def test_herbst_zero():
    m = site_measure(InteractionFamily(d=1, R=1, diag=1.0))
    r = herbst_check(m, QuadPoly([X0], [[0.0]], [0.0]), 8.0, 0.05, 1.0)
    assert r.lhs == pytest.approx(0.0, abs=1e-15) and r.rhs == 0.0


@given(st.floats(0.001, 0.2))
def test_herbst_square_against_quadrature(eps):
    m = site_measure(InteractionFamily(d=1, R=1, diag=1.0))
    g = QuadPoly.coordinate(X0, 2)
    r = herbst_check(m, g, 4.0, eps, 1.0)
    z = np.linspace(-15, 15, 30001)
    w = np.exp(-z * z)
    ref = np.log(np.sum(w * np.exp(eps * z * z)) / np.sum(w))
    assert r.lhs == pytest.approx(ref, rel=1e-9)
    assert r.lhs == pytest.approx(-0.5 * np.log(1 - eps), rel=1e-9)


def test_herbst_rejects_large_eps():
    m = site_measure(InteractionFamily(d=1, R=1, diag=1.0))
    with pytest.raises(ValueError):
        herbst_check(m, QuadPoly.coordinate(X0, 2), 8.0, 0.2, 1.0)


def test_mixing_product_measure_uncorrelated():
    m = LocalGibbsMeasure(InteractionFamily(d=1, R=1, diag=1.0), Region.interval(-8, 8), BoundaryCondition())
    rep = mixing_decay(m, [(r, QuadPoly.coordinate(X0), QuadPoly.coordinate((r,))) for r in range(1, 5)])
    assert np.all(rep.cov == 0.0)


def test_mixing_chain_matches_inverse(chain):
    n = 41
    m = LocalGibbsMeasure(chain, Region.interval(-20, 20), BoundaryCondition())
    rep = mixing_decay(m, [(r, QuadPoly.coordinate(X0), QuadPoly.coordinate((r,))) for r in range(1, 11)])
    C = np.eye(n) + 0.2 * (np.eye(n, k=1) + np.eye(n, k=-1))
    ref = np.abs(np.linalg.inv(2 * C)[20, 21:31])
    np.testing.assert_allclose(rep.cov, ref, atol=1e-10)
    assert rep.monotone and rep.rate > 0


def test_density_ratio_constant_trivial():
    assert density_ratio_constant(InteractionFamily(d=1, R=1, diag=1.0)) == 1.0


def test_density_ratio_constant_perturbed():
    fam = InteractionFamily(d=1, R=1, diag=1.0, perturbations=cos_sum(0.1), epsilon=1.0)
    assert density_ratio_constant(fam) == pytest.approx(np.exp(0.8))


def test_density_ratio_errors(chain):
    with pytest.raises(ValueError, match="bound restricted to one-dimensional lattice"):
        density_ratio_constant(InteractionFamily(d=2, R=1, diag=1.0))
    with pytest.raises(ValueError, match="unbounded"):
        density_ratio_constant(chain)


def test_density_ratio_samples_within_bound():
    fam = InteractionFamily(d=1, R=1, diag=1.0, perturbations=cos_sum(0.3), epsilon=0.5)
    rep = density_ratio_bound(fam, Region.interval(0, 1), BoundaryCondition({-1: 1.1, 2: -0.4}), 2000, seed=3)
    assert rep.passed


def test_unknown_backend(single_site):
    with pytest.raises(ValueError, match="unknown backend"):
        LocalGibbsMeasure(single_site, Region.interval(0, 0), INTERIOR, "magic")


def test_perturbed_family_has_no_closed_form():
    fam = chain_family(1.0, 0.2, epsilon=0.1, perturbations=cos_sum(0.2))
    with pytest.raises(ValueError, match="closed form requires bilinear family"):
        LocalGibbsMeasure(fam, Region.interval(0, 1), INTERIOR, "gaussian")
