"""Closed-form Gaussian algebra: moments, quadratic-exponential integrands and
conditional expectations under a Gaussian with precision P and linear term l
(density proportional to exp(-1/2 x^T P x - l^T x))."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lattice import Site


def _sym(M):
    return 0.5 * (M + M.T)


def _logdet_sqrt_inv(S) -> complex:
    """-1/2 log det S with the branch continuous from the real SPD case."""
    if np.iscomplexobj(S) and np.abs(S.imag).max(initial=0.0) > 0:
        lam = np.linalg.eigvals(S)
        if np.any(lam.real <= 0):
            raise ValueError("unsupported integrand class")
        return -0.5 * np.log(lam).sum()
    sign, ld = np.linalg.slogdet(S.real)
    if sign <= 0:
        raise ValueError("unsupported integrand class")
    return -0.5 * ld


@dataclass
class GaussianMeasureData:
    """Mean and covariance of a Gaussian over an ordered list of sites."""

    sites: tuple[Site, ...]
    mean: np.ndarray
    cov: np.ndarray
    precision: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = _sym(np.asarray(self.cov, dtype=float))
        if self.precision is None:
            self.precision = _sym(np.linalg.inv(self.cov))
        self._index = {s: k for k, s in enumerate(self.sites)}

    @classmethod
    def from_precision(cls, sites, P, l) -> GaussianMeasureData:
        P = _sym(np.asarray(P, dtype=float))
        try:
            np.linalg.cholesky(P)
        except np.linalg.LinAlgError:
            raise ValueError("not normalizable") from None
        cov = _sym(np.linalg.inv(P))
        return cls(tuple(sites), -cov @ np.asarray(l, dtype=float), cov, P)

    @property
    def linear(self) -> np.ndarray:
        return -self.precision @ self.mean

    def indices(self, sites) -> np.ndarray:
        try:
            return np.array([self._index[s] for s in sites], dtype=int)
        except KeyError as e:
            raise KeyError(f"site {e.args[0]} outside the measure's region") from None

    def marginal(self, sites) -> GaussianMeasureData:
        idx = self.indices(sites)
        return GaussianMeasureData(tuple(sites), self.mean[idx], self.cov[np.ix_(idx, idx)])


@dataclass
class QuadExp:
    """f(x) = exp(-1/2 x^T A x + b^T x + c) over the coordinates ``sites``."""

    sites: tuple[Site, ...]
    A: np.ndarray
    b: np.ndarray
    c: complex = 0.0

    def __post_init__(self):
        self.sites = tuple(self.sites)
        n = len(self.sites)
        self.A = np.asarray(self.A).reshape(n, n)
        self.A = _sym(self.A)
        self.b = np.asarray(self.b).reshape(n)

    @classmethod
    def constant(cls, value: float = 1.0) -> QuadExp:
        return cls((), np.zeros((0, 0)), np.zeros(0), np.log(complex(value)) if value <= 0 else np.log(value))

    @classmethod
    def exp_affine(cls, sites, a, c=0.0) -> QuadExp:
        n = len(sites)
        return cls(tuple(sites), np.zeros((n, n)), np.asarray(a), c)

    def is_real(self) -> bool:
        return not (np.iscomplexobj(self.A) and np.abs(self.A.imag).max(initial=0) > 0
                    or np.iscomplexobj(self.b) and np.abs(self.b.imag).max(initial=0) > 0
                    or np.imag(self.c) != 0)

    def log_value(self, x):
        x = np.asarray(x, dtype=float)
        return (-0.5 * np.einsum("...i,ij,...j->...", x, self.A, x) + x @ self.b + self.c)

    def __call__(self, x):
        return np.exp(self.log_value(x))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return self(x)[..., None] * (self.b - x @ self.A)

    def abs2(self) -> QuadExp:
        return QuadExp(self.sites, 2 * self.A.real, 2 * self.b.real, 2 * np.real(self.c))

    def power(self, s) -> QuadExp:
        return QuadExp(self.sites, s * self.A, s * self.b, s * self.c)

    def sqrt(self) -> QuadExp:
        return self.power(0.5)

    def conj(self) -> QuadExp:
        return QuadExp(self.sites, np.conj(self.A), np.conj(self.b), np.conj(self.c))

    def embed(self, sites) -> QuadExp:
        """Same function written over a superset of coordinates."""
        sites = tuple(sites)
        pos = {s: k for k, s in enumerate(sites)}
        idx = np.array([pos[s] for s in self.sites], dtype=int)
        n = len(sites)
        dtype = np.result_type(self.A, self.b, complex(self.c) if np.iscomplexobj(self.c) else 0.0)
        A = np.zeros((n, n), dtype=dtype)
        b = np.zeros(n, dtype=dtype)
        A[np.ix_(idx, idx)] = self.A
        b[idx] = self.b
        return QuadExp(sites, A, b, self.c)

    def __mul__(self, other: QuadExp) -> QuadExp:
        sites = tuple(sorted(set(self.sites) | set(other.sites)))
        f, g = self.embed(sites), other.embed(sites)
        return QuadExp(sites, f.A + g.A, f.b + g.b, f.c + g.c)

    def prune(self, tol: float = 0.0) -> QuadExp:
        """Drop coordinates the function does not depend on."""
        keep = [k for k in range(len(self.sites))
                if np.abs(self.A[k]).max(initial=0) > tol or abs(self.b[k]) > tol]
        idx = np.array(keep, dtype=int)
        return QuadExp(tuple(self.sites[k] for k in keep), self.A[np.ix_(idx, idx)], self.b[idx], self.c)


@dataclass
class QuadPoly:
    """q(x) = x^T M x + v^T x + k over the coordinates ``sites``."""

    sites: tuple[Site, ...]
    M: np.ndarray
    v: np.ndarray
    k: complex = 0.0

    def __post_init__(self):
        self.sites = tuple(self.sites)
        n = len(self.sites)
        self.M = _sym(np.asarray(self.M).reshape(n, n))
        self.v = np.asarray(self.v).reshape(n)

    @classmethod
    def coordinate(cls, site: Site, power: int = 1) -> QuadPoly:
        if power == 1:
            return cls((site,), [[0.0]], [1.0], 0.0)
        if power == 2:
            return cls((site,), [[1.0]], [0.0], 0.0)
        raise ValueError("only degrees 1 and 2 are representable")

    @classmethod
    def product(cls, i: Site, j: Site) -> QuadPoly:
        if i == j:
            return cls.coordinate(i, 2)
        return cls((i, j), [[0.0, 0.5], [0.5, 0.0]], [0.0, 0.0], 0.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, self.M, x) + x @ self.v + self.k

    def embed(self, sites) -> QuadPoly:
        sites = tuple(sites)
        pos = {s: k for k, s in enumerate(sites)}
        idx = np.array([pos[s] for s in self.sites], dtype=int)
        n = len(sites)
        dtype = np.result_type(self.M, self.v)
        M = np.zeros((n, n), dtype=dtype)
        v = np.zeros(n, dtype=dtype)
        M[np.ix_(idx, idx)] = self.M
        v[idx] = self.v
        return QuadPoly(sites, M, v, self.k)

    def __add__(self, other: QuadPoly) -> QuadPoly:
        sites = tuple(sorted(set(self.sites) | set(other.sites)))
        f, g = self.embed(sites), other.embed(sites)
        return QuadPoly(sites, f.M + g.M, f.v + g.v, f.k + g.k)

    def scale(self, s) -> QuadPoly:
        return QuadPoly(self.sites, s * self.M, s * self.v, s * self.k)


# -- expectations -----------------------------------------------------------

def expect_quadexp(gm: GaussianMeasureData, f: QuadExp) -> complex:
    """E[f] in closed form; requires Re(P + A) positive definite."""
    if not f.sites:
        return np.exp(f.c)
    g = gm.marginal(f.sites)
    return np.exp(log_expect_quadexp(g, f))


def log_expect_quadexp(g: GaussianMeasureData, f: QuadExp) -> complex:
    P, m = g.precision, g.mean
    S = P + f.A
    v = P @ m + f.b
    try:
        w = np.linalg.solve(S, v)
    except np.linalg.LinAlgError:
        raise ValueError("unsupported integrand class") from None
    _, ldP = np.linalg.slogdet(P)
    return (0.5 * ldP + _logdet_sqrt_inv(S) + 0.5 * v @ w - 0.5 * m @ P @ m + f.c)


def tilted(gm: GaussianMeasureData, f: QuadExp):
    """Mean and (complex) covariance of the measure f*gm/E[f] on f.sites."""
    g = gm.marginal(f.sites)
    S = g.precision + f.A
    Sinv = np.linalg.inv(S)
    return Sinv @ (g.precision @ g.mean + f.b), _sym(Sinv)


def expect_poly(gm: GaussianMeasureData, q: QuadPoly) -> complex:
    if not q.sites:
        return q.k
    g = gm.marginal(q.sites)
    m = g.mean
    return np.trace(q.M @ g.cov) + m @ q.M @ m + q.v @ m + q.k


def expect_quadexp_poly(gm: GaussianMeasureData, f: QuadExp, q: QuadPoly) -> complex:
    """E[f q] = E[f] E_tilted[q]."""
    sites = tuple(sorted(set(f.sites) | set(q.sites)))
    fe, qe = f.embed(sites), q.embed(sites)
    Ef = expect_quadexp(gm, fe)
    nu, Sig = tilted(gm, fe)
    return Ef * (np.trace(qe.M @ Sig) + nu @ qe.M @ nu + qe.v @ nu + qe.k)


def expect_callable(gm: GaussianMeasureData, sites: Sequence[Site], fn: Callable,
                    nodes: int = 24) -> complex:
    """Tensor Gauss-Hermite quadrature of fn over the marginal on ``sites``."""
    sites = tuple(sites)
    if not sites:
        return fn(np.zeros((1, 0)))[0]
    k = len(sites)
    if nodes ** k > 4_000_000:
        raise ValueError("unsupported integrand class")
    g = gm.marginal(sites)
    z, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / np.sqrt(2 * np.pi)
    Z = np.stack(np.meshgrid(*([z] * k), indexing="ij"), axis=-1).reshape(-1, k)
    W = np.prod(np.stack(np.meshgrid(*([w] * k), indexing="ij"), axis=-1).reshape(-1, k), axis=1)
    Lc = np.linalg.cholesky(g.cov)
    X = g.mean + Z @ Lc.T
    return np.sum(W * fn(X))


# -- conditional expectations ------------------------------------------------

@dataclass
class ConditionalGaussian:
    """Conditional law of coordinates X given the rest under a Gaussian.

    ``P`` and ``l`` describe the joint density exp(-1/2 x^T P x - l^T x)
    over ``sites``; neighbours are read from the sparsity of P.
    """

    sites: tuple[Site, ...]
    P: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        self._index = {s: k for k, s in enumerate(self.sites)}
        nz = np.abs(self.P) > 0
        self._nbrs = [np.flatnonzero(nz[k]) for k in range(len(self.sites))]

    def idx(self, sites) -> np.ndarray:
        return np.array([self._index[s] for s in sites], dtype=int)

    def neighbourhood(self, X) -> tuple[Site, ...]:
        """Sites outside X coupled to X."""
        inX = set(X)
        out = set()
        for s in X:
            for k in self._nbrs[self._index[s]]:
                t = self.sites[k]
                if t not in inX:
                    out.add(t)
        return tuple(sorted(out))

    def affine_map(self, X, rest):
        """x_X = T x_rest + t0 + noise with noise covariance Sig."""
        iX, ir = self.idx(X), self.idx(rest)
        PXX = self.P[np.ix_(iX, iX)]
        Sig = _sym(np.linalg.inv(PXX))
        T = -Sig @ self.P[np.ix_(iX, ir)]
        t0 = -Sig @ self.l[iX]
        return T, t0, Sig

    def quadexp(self, f: QuadExp, X) -> QuadExp:
        X = tuple(s for s in sorted(set(X)) if s in self._index)
        inX = set(X)
        if not inX & set(f.sites):
            return f
        rest = tuple(sorted((set(f.sites) - inX) | set(self.neighbourhood(X))))
        fe = f.embed(X + rest)
        k = len(X)
        iX, ir = self.idx(X), self.idx(rest)
        PXX = self.P[np.ix_(iX, iX)]
        PXr = self.P[np.ix_(iX, ir)]
        lX = self.l[iX]
        S = fe.A[:k, :k] + PXX
        G = fe.A[:k, k:] + PXr
        beta = fe.b[:k] - lX
        SinvG = np.linalg.solve(S, G)
        Sinvb = np.linalg.solve(S, beta)
        PinvPXr = np.linalg.solve(PXX, PXr)
        PinvlX = np.linalg.solve(PXX, lX)
        A2 = fe.A[k:, k:] - G.T @ SinvG + PXr.T @ PinvPXr
        b2 = fe.b[k:] - G.T @ Sinvb - PXr.T @ PinvlX
        _, ldP = np.linalg.slogdet(PXX)
        c2 = (fe.c + 0.5 * ldP + _logdet_sqrt_inv(S) + 0.5 * beta @ Sinvb - 0.5 * lX @ PinvlX)
        out = QuadExp(rest, A2, b2, c2)
        if f.is_real():
            out = QuadExp(rest, out.A.real, out.b.real, np.real(out.c))
        return out.prune()

    def poly(self, q: QuadPoly, X) -> QuadPoly:
        X = tuple(s for s in sorted(set(X)) if s in self._index)
        inX = set(X)
        if not inX & set(q.sites):
            return q
        rest = tuple(sorted((set(q.sites) - inX) | set(self.neighbourhood(X))))
        qe = q.embed(X + rest)
        k, n = len(X), len(X) + len(rest)
        T, t0, Sig = self.affine_map(X, rest)
        E = np.zeros((n, len(rest)))
        E[:k] = T
        E[k:] = np.eye(len(rest))
        e0 = np.zeros(n)
        e0[:k] = t0
        M2 = E.T @ qe.M @ E
        v2 = E.T @ (2 * qe.M @ e0 + qe.v)
        k2 = e0 @ qe.M @ e0 + qe.v @ e0 + qe.k + np.trace(qe.M[:k, :k] @ Sig)
        return QuadPoly(rest, M2, v2, k2)
