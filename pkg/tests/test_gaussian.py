import numpy as np
import pytest
from hypothesis import given, strategies as st

from lselab.gaussian import (ConditionalGaussian, GaussianMeasureData, QuadExp, QuadPoly, expect_callable,
                             expect_poly, expect_quadexp, expect_quadexp_poly)

S = ((0,), (1,), (2,))


def random_measure(seed, n=3):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    P = B @ B.T + n * np.eye(n)
    return GaussianMeasureData.from_precision(S[:n], P, rng.normal(size=n))


@given(st.floats(0.1, 4.0))
def test_second_moment(var):
    gm = GaussianMeasureData(((0,),), [0.0], [[var]])
    assert expect_poly(gm, QuadPoly.coordinate((0,), 2)) == pytest.approx(var)


def test_constant_expectation():
    gm = random_measure(0)
    assert expect_quadexp(gm, QuadExp.constant(1.0)) == pytest.approx(1.0)
    assert expect_poly(gm, QuadPoly((), np.zeros((0, 0)), np.zeros(0), 1.0)) == 1.0


@given(st.integers(0, 10_000), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_quadexp_matches_quadrature(seed, a0, a1):
    gm = random_measure(seed)
    f = QuadExp(S[:2], [[0.3, 0.1], [0.1, 0.2]], [a0, a1], 0.1)
    ref = expect_callable(gm, f.sites, f, nodes=40)
    assert expect_quadexp(gm, f) == pytest.approx(ref, rel=1e-10)


@given(st.integers(0, 10_000))
def test_quadexp_poly_matches_quadrature(seed):
    gm = random_measure(seed)
    f = QuadExp(S[:2], [[0.4, 0.0], [0.0, 0.1]], [0.2, -0.3])
    q = QuadPoly(S[1:], [[1.0, 0.3], [0.3, -0.5]], [0.2, 0.1], 0.7)
    ref = expect_callable(gm, S, lambda x: f(x[:, :2]) * q(x[:, 1:]), nodes=30)
    assert expect_quadexp_poly(gm, f, q) == pytest.approx(ref, rel=1e-9)


def test_complex_quadexp_is_characteristic_function():
    gm = GaussianMeasureData(((0,),), [0.4], [[0.7]])
    t = 1.3
    f = QuadExp.exp_affine([(0,)], [1j * t])
    assert expect_quadexp(gm, f) == pytest.approx(np.exp(1j * t * 0.4 - 0.5 * 0.7 * t * t))


def test_quadexp_algebra():
    f = QuadExp(S[:2], [[1.0, 0.2], [0.2, 0.5]], [0.3, -0.1], 0.2)
    g = QuadExp(S[1:], [[0.4, 0.0], [0.0, 0.3]], [0.1, 0.2])
    x = np.random.default_rng(0).normal(size=(5, 3))
    np.testing.assert_allclose((f * g)(x), f(x[:, :2]) * g(x[:, 1:]))
    np.testing.assert_allclose(f.abs2()(x[:, :2]), np.abs(f(x[:, :2])) ** 2)
    np.testing.assert_allclose(f.sqrt()(x[:, :2]) ** 2, f(x[:, :2]))


def test_quadexp_gradient():
    f = QuadExp(S[:2], [[1.0, 0.2], [0.2, 0.5]], [0.3, -0.1])
    x = np.array([0.4, -0.2])
    h = 1e-6
    fd = [(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(f.grad(x), fd, rtol=1e-7)


def test_marginal_and_from_precision():
    P = np.array([[2.0, 0.4], [0.4, 2.0]])
    gm = GaussianMeasureData.from_precision(S[:2], P, [0.0, 0.0])
    np.testing.assert_allclose(gm.cov, np.linalg.inv(P))
    assert gm.marginal([(1,)]).cov[0, 0] == pytest.approx(np.linalg.inv(P)[1, 1])


def test_from_precision_not_normalizable():
    with pytest.raises(ValueError, match="not normalizable"):
        GaussianMeasureData.from_precision(S[:1], [[-1.0]], [0.0])


def _chain_conditional(n=6):
    P = 2 * (np.eye(n) + 0.2 * (np.eye(n, k=1) + np.eye(n, k=-1)))
    sites = tuple((k,) for k in range(n))
    l = np.linspace(-0.3, 0.4, n)
    return ConditionalGaussian(sites, P, l), GaussianMeasureData.from_precision(sites, P, l)


def test_conditional_mean_is_affine_in_neighbours():
    cg, _ = _chain_conditional()
    g = cg.poly(QuadPoly.coordinate((2,)), [(2,)])
    assert set(g.sites) == {(1,), (3,)}
    assert not g.M.any()
    np.testing.assert_allclose(g.v, [-0.2, -0.2])


@given(st.integers(0, 10_000))
def test_tower_property(seed):
    cg, gm = _chain_conditional()
    rng = np.random.default_rng(seed)
    f = QuadExp(((1,), (2,)), [[0.3, 0.1], [0.1, 0.2]], rng.normal(size=2) * 0.5)
    g = cg.quadexp(f, [(1,), (2,), (3,)])
    assert expect_quadexp(gm, g) == pytest.approx(expect_quadexp(gm, f), rel=1e-12)
    q = QuadPoly(((2,), (4,)), [[1.0, 0.2], [0.2, 0.3]], rng.normal(size=2), 0.1)
    assert expect_poly(gm, cg.poly(q, [(3,), (4,)])) == pytest.approx(expect_poly(gm, q), rel=1e-12, abs=1e-12)


def test_conditional_quadexp_against_quadrature():
    cg, gm = _chain_conditional(4)
    f = QuadExp(((1,),), [[0.5]], [0.3])
    g = cg.quadexp(f, [(1,)])
    # condition on x0 = 0.2, x2 = -0.5: density of x1 is exp(-1/2 P11 x1^2 - (P10 x0 + P12 x2 + l1) x1)
    x0, x2 = 0.2, -0.5
    z = np.linspace(-12, 12, 20001)
    dens = np.exp(-0.5 * cg.P[1, 1] * z ** 2 - (cg.P[1, 0] * x0 + cg.P[1, 2] * x2 + cg.l[1]) * z)
    ref = np.sum(dens * f(z[:, None])) / np.sum(dens)
    assert g(np.array([x0, x2])) == pytest.approx(ref, rel=1e-10)


def test_conditioning_far_away_is_identity():
    cg, _ = _chain_conditional()
    f = QuadExp(((0,),), [[1.0]], [0.0])
    assert cg.quadexp(f, [(4,), (5,)]) is f
