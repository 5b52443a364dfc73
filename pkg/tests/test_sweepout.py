import numpy as np
import pytest
from hypothesis import given, strategies as st

from lselab.gaussian import QuadExp, QuadPoly, expect_poly
from lselab.lattice import Region
from lselab.potential import InteractionFamily, chain_family
from lselab.sweepout import (CylinderFunction, PiOperator, check_dlr_pi, default_gamma_tests, estimate_gamma,
                             gamma_ratio, iterate_pi, pi_entropy_bound, sweeping_coefficients)

X0 = (0,)


@pytest.fixture(scope="module")
def pi_chain():
    return PiOperator(chain_family(1.0, 0.2), Region.interval(-32, 32), 4)


@pytest.fixture(scope="module")
def pi_product():
    return PiOperator(InteractionFamily(d=1, R=1, diag=1.0), Region.interval(-32, 32), 4)


def test_constant_fixed(pi_chain):
    assert pi_chain.apply(1.0) == 1.0
    one = QuadExp.constant(1.0)
    assert np.exp(pi_chain.apply(one).c) == pytest.approx(1.0)


def test_function_outside_box_unchanged(pi_chain):
    f = QuadPoly.coordinate((100,), 2)
    assert pi_chain.apply(f) is f


def test_conditional_mean_affine_in_halo(pi_chain):
    cube = next(c for c in pi_chain.pieces[0] if X0 in c)
    g = pi_chain.apply_Es(0, QuadPoly.coordinate(X0))
    halo = cube.halo(1)
    assert set(g.sites) <= set(halo.sites)
    assert not g.M.any()


def test_product_measure_one_pass_gives_mean(pi_product):
    g = pi_product.apply(QuadPoly.coordinate((1,), 2))
    assert not g.sites or (not g.M.any() and not g.v.any())
    assert expect_poly(pi_product.measure, g) == pytest.approx(0.5)


@pytest.mark.parametrize("f", [QuadPoly.coordinate(X0, 2), QuadPoly.product(X0, (3,)),
                               QuadExp.exp_affine([X0, (1,)], [0.5, -0.3]), QuadExp([(2,)], [[1.0]], [0.2])])
def test_dlr_chain(pi_chain, f):
    assert check_dlr_pi(pi_chain, f) < 1e-8


def test_dlr_product(pi_product):
    assert check_dlr_pi(pi_product, QuadPoly.coordinate(X0, 2)) < 1e-15


def test_geometric_convergence(pi_chain):
    rep = iterate_pi(pi_chain, QuadPoly.coordinate(X0), 8)
    assert rep.ratio < 1
    assert np.all(np.diff(np.log(rep.sup_diff)) < 0)


def test_entropy_bound_constant(pi_chain):
    assert pi_chain and pi_entropy_bound(pi_chain, QuadExp.constant(2.0)).lhs == pytest.approx(0.0, abs=1e-14)


def test_entropy_bound_affine_function_finite(pi_chain):
    eb = pi_entropy_bound(pi_chain, QuadPoly((X0,), [[0.0]], [0.1], 1.0))
    assert eb.dirichlet == pytest.approx(0.01)
    assert np.isfinite(eb.ratio) and eb.ratio > 0


def test_gamma_product_measure_zero(pi_product):
    assert gamma_ratio(pi_product, QuadExp.exp_affine([(1,)], [1.0])) == 0.0


def test_gamma_decreasing_in_L():
    fam = chain_family(1.0, 0.2)
    g = [estimate_gamma(p, default_gamma_tests(p)) for p in
         (PiOperator(fam, Region.interval(-64, 64), L) for L in (2, 4, 8))]
    assert g[0] < 1 and g[2] < g[1] < g[0]


def test_gamma_far_function_bounded(pi_chain):
    assert gamma_ratio(pi_chain, QuadExp.exp_affine([(200,)], [1.0])) <= 1.0


def test_sweeping_product_no_coupling(pi_product):
    cube = next(c for c in pi_product.pieces[0] if (2,) in c)
    f = QuadExp([(2,)], [[1.0]], [0.2])
    rep = sweeping_coefficients(pi_product, cube, f, [(k,) for k in range(-12, 12)])
    assert all(r.alpha == 0.0 for r in rep.rows)


def test_sweeping_chain_decay(pi_chain):
    cube = next(c for c in pi_chain.pieces[0] if (2,) in c)
    f = QuadExp([(2,)], [[1.0]], [0.2])
    rep = sweeping_coefficients(pi_chain, cube, f, [(k,) for k in range(-15, 20)])
    assert rep.rate > 0 and rep.envelope_holds
    nearest = min(r.distance for r in rep.rows)
    assert max(rep.rows, key=lambda r: r.alpha).distance == nearest


def test_table_path_matches_closed_form():
    pi = PiOperator(chain_family(1.0, 0.2), Region.interval(0, 4), 1, nodes=16)
    f = pi.tabulate([(2,)], lambda x: x[..., 0] ** 2)
    ref = pi.ambient.expect(QuadPoly.coordinate((2,), 2)).real
    assert pi.table_expect(f) == pytest.approx(ref, abs=1e-4)
    g = pi.apply_Es(0, f)
    assert float(np.asarray(g.table)) == pytest.approx(ref, abs=1e-4)


def test_table_path_active_set_cap():
    pi = PiOperator(chain_family(1.0, 0.2), Region.interval(0, 20), 4, cap=1, nodes=8)
    f = pi.tabulate([(4,)], lambda x: x[..., 0])
    with pytest.raises(ValueError, match="active set too large"):
        pi.apply_Es(0, f)


def test_cylinder_rank_validation():
    with pytest.raises(ValueError):
        CylinderFunction(((0,), (1,)), np.zeros(4))


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_pi_preserves_expectation_of_affine_exponentials(a, b):
    pi = PiOperator(chain_family(1.0, 0.2), Region.interval(-16, 16), 2)
    assert check_dlr_pi(pi, QuadExp.exp_affine([X0, (5,)], [a, b])) < 1e-10
