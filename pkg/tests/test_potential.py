import numpy as np
import pytest
from hypothesis import given, strategies as st

from lselab.lattice import Region
from lselab.potential import (INTERIOR, BoundaryCondition, InteractionFamily, LocalEnergy, chain_family,
                              convexity_B, cos_sum, derivative_bound_A, energy_U, grad_U, ground_state_V,
                              ground_state_potential, hess_U, hessian_lower_bound, parse_family_config)


def test_energy_full_mode_diagonal(single_site):
    assert energy_U(single_site, Region.interval(0, 1), BoundaryCondition(), {(0,): 1.0, (1,): 2.0}) == 5.0


def test_energy_boundary_cross_term(pair_family):
    u = energy_U(pair_family, Region.interval(0, 0), BoundaryCondition({1: 3.0}), {(0,): 1.0})
    assert u == pytest.approx(1.6, abs=1e-15)


def test_energy_interior_drops_cross_pair(pair_family):
    x = {(0,): 1.7}
    assert energy_U(pair_family, Region.interval(0, 0), INTERIOR, x) == pytest.approx(1.7 ** 2)


def test_energy_missing_coordinate(single_site):
    with pytest.raises(KeyError, match="unassigned site"):
        energy_U(single_site, Region.interval(0, 1), BoundaryCondition(), {(0,): 1.0})


def test_gradient_and_hessian_single_site(single_site):
    r = Region.interval(0, 0)
    assert grad_U(single_site, r, INTERIOR, {(0,): 3.0})[(0,)] == pytest.approx(6.0)
    assert hess_U(single_site, r, INTERIOR, {(0,): 3.0})[0, 0] == pytest.approx(2.0)


def test_mixed_derivative_is_pair_coefficient(pair_family):
    H = hess_U(pair_family, Region.interval(0, 1), INTERIOR, {(0,): 0.3, (1,): -1.1})
    assert H[0, 1] == pytest.approx(0.2)


def test_zero_family_gradient_vanishes():
    fam = InteractionFamily(d=1, R=1, diag=0.0)
    g = grad_U(fam, Region.interval(0, 2), BoundaryCondition(), {(0,): 1.0, (1,): 2.0, (2,): -3.0})
    assert all(v == 0.0 for v in g.values())


def test_chain_family_uses_matrix_convention(chain):
    H = hess_U(chain, Region.interval(0, 1), INTERIOR, {(0,): 0.0, (1,): 0.0})
    np.testing.assert_allclose(H, 2 * np.array([[1.0, 0.2], [0.2, 1.0]]))


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(0.0, 0.3))
def test_gradient_matches_finite_differences(x, eps):
    fam = chain_family(1.0, 0.2, epsilon=eps, perturbations=cos_sum(0.5))
    e = LocalEnergy(fam, Region.interval(0, 2), BoundaryCondition({-1: 0.4, 3: -0.9}))
    x = np.array(x)
    h = 1e-6
    fd = np.array([(e.value(x + h * v) - e.value(x - h * v)) / (2 * h) for v in np.eye(3)])
    np.testing.assert_allclose(e.grad(x), fd, atol=1e-6)
    Hfd = np.array([(e.grad(x + h * v) - e.grad(x - h * v)) / (2 * h) for v in np.eye(3)])
    np.testing.assert_allclose(e.hess(x), Hfd, atol=1e-5)


@given(st.floats(0.1, 5.0), st.floats(-2.0, 2.0))
def test_ground_state_V_single_site(c, lam):
    fam = InteractionFamily(d=1, R=1, diag=c)
    V = ground_state_V(fam, Region.interval(0, 0), lam)
    assert V.constant == pytest.approx(-c)
    assert V.coefficient((0,), (0,)) == pytest.approx(lam * c + c * c)


def test_ground_state_V_zero_family():
    V = ground_state_V(InteractionFamily(d=1, R=1, diag=0.0), Region.interval(0, 2), 0.7)
    assert V.constant == 0.0 and not V.quadratic.any()


def test_ground_state_V_matches_pointwise_identity(chain):
    region = Region.interval(0, 2)
    V = ground_state_V(chain, region, 0.5)
    rng = np.random.default_rng(1)
    for _ in range(20):
        xs = rng.normal(size=len(V.sites))
        vals = dict(zip(V.sites.sites, xs))
        e = LocalEnergy(chain, region, BoundaryCondition({s: vals[s] for s in V.sites.sites if s not in region}))
        xin = np.array([vals[s] for s in region.sites])
        assert ground_state_potential(e, 0.5, xin) == pytest.approx(V(xs), rel=1e-12, abs=1e-12)


def test_ground_state_V_requires_bilinear():
    fam = chain_family(1.0, 0.2, epsilon=0.1, perturbations=cos_sum(0.1))
    with pytest.raises(ValueError, match="closed form requires bilinear family"):
        ground_state_V(fam, Region.interval(0, 1), 0.5)


def test_derivative_bound_A(single_site, pair_family, chain):
    assert derivative_bound_A(single_site) == 0.0
    assert derivative_bound_A(pair_family) == pytest.approx(0.2)
    assert derivative_bound_A(chain) == pytest.approx(0.4)


def test_derivative_bound_A_with_perturbation_dominates_samples():
    fam = InteractionFamily(d=1, R=1, diag=1.0, bonds={(1,): 0.2}, perturbations=cos_sum(0.3), epsilon=0.5)
    A = derivative_bound_A(fam)
    assert A == pytest.approx(0.2 + 0.5 * 0.3)
    e = LocalEnergy(fam, Region.interval(0, 3), BoundaryCondition())
    H = e.hess(np.random.default_rng(0).normal(scale=3, size=(500, 4)))
    off = np.abs(H - np.eye(4) * H).max()
    assert off <= A + 1e-12


def test_convexity_B():
    assert convexity_B(InteractionFamily(d=1, R=1, diag=1.0)) == 2.0
    fam = InteractionFamily(d=1, R=1, diag=1.0, perturbations=cos_sum(0.25), epsilon=1.0)
    assert convexity_B(fam) == pytest.approx(1.5)
    e = LocalEnergy(fam, Region.interval(0, 3), BoundaryCondition())
    H = e.hess(np.random.default_rng(3).normal(scale=3, size=(500, 4)))
    assert np.diagonal(H, axis1=-2, axis2=-1).min() >= 1.5 - 1e-12


def test_convexity_violated():
    fam = InteractionFamily(d=1, R=1, diag=0.1, perturbations=cos_sum(1.0), epsilon=1.0)
    with pytest.raises(ValueError, match="strong convexity violated"):
        convexity_B(fam)


def test_hessian_lower_bound_chain(chain):
    assert hessian_lower_bound(chain) == pytest.approx(1.2)


def test_gaussian_single_site(single_site):
    mean, cov = LocalEnergy(single_site, Region.interval(0, 0), BoundaryCondition()).gaussian()
    assert mean[0] == 0.0 and cov[0, 0] == pytest.approx(0.5)


def test_gaussian_two_sites_covariance(chain):
    _, cov = LocalEnergy(chain, Region.interval(0, 1), INTERIOR).gaussian()
    np.testing.assert_allclose(cov, np.linalg.inv(2 * np.array([[1, 0.2], [0.2, 1]])), atol=1e-14)


def test_gaussian_boundary_mean(pair_family):
    mean, _ = LocalEnergy(pair_family, Region.interval(0, 0), BoundaryCondition({1: 3.0})).gaussian()
    assert mean[0] == pytest.approx(-0.3)


def test_gaussian_not_normalizable():
    fam = InteractionFamily(d=1, R=1, diag=-1.0)
    with pytest.raises(ValueError, match="not normalizable"):
        LocalEnergy(fam, Region.interval(0, 0), INTERIOR).gaussian()


def test_parse_family_config_conventions():
    pair = parse_family_config("dim = 1\ndiag = 1\nbond 1 0.2\n")
    matrix = parse_family_config("convention = matrix\nbond 1 0.2\n")
    assert pair.coef((0,), (1,)) == pytest.approx(0.2)
    assert matrix.coef((0,), (1,)) == pytest.approx(0.4)
    pert = parse_family_config("epsilon = 0.1\nW = cos_sum 0.5\n")
    assert not pert.is_bilinear


@pytest.mark.parametrize("text", ["diag = x", "colour = red", "bond 1", "W = nonsense 1"])
def test_parse_family_config_errors(text):
    with pytest.raises(ValueError, match="malformed family config"):
        parse_family_config(text)
