"""Local Gibbs measures exp(-U_Lambda) with Gaussian-exact, grid and MALA backends,
plus the inequality checks built on them (spectral gap, log-Sobolev, DLR,
Herbst-type exponential bound, decay of correlations, density ratios)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .gaussian import (ConditionalGaussian, GaussianMeasureData, QuadExp, QuadPoly,
                       expect_callable, expect_poly, expect_quadexp, expect_quadexp_poly)
from .grid import GridMeasureData, GridSpec
from .lattice import Region, Site
from .mcmc import Estimate, McmcConfig, batch_means, run_mala
from .potential import (INTERIOR, InteractionFamily, LocalEnergy, convexity_B,
                        hessian_lower_bound)

BACKENDS = ("gaussian", "grid", "mcmc")


@dataclass
class LocalFunction:
    """Cylinder function given by a vectorised callable of its support coordinates."""

    sites: tuple[Site, ...]
    fn: Callable
    grad: Callable | None = None

    def __post_init__(self):
        self.sites = tuple(self.sites)

    def __call__(self, x):
        return self.fn(x)


def _grad_fd(fn, x, h=1e-4):
    g = np.empty(x.shape, dtype=complex)
    for k in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[k] = h
        g[..., k] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


class LocalGibbsMeasure:
    """E_Lambda with boundary condition ``mode`` (or INTERIOR) and a backend."""

    def __init__(self, family: InteractionFamily, region: Region, mode=INTERIOR,
                 backend: str = "gaussian", grid_spec: GridSpec | None = None,
                 mcmc: McmcConfig | None = None, grid_scheme: str = "spectral"):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}")
        self.family = family
        self.region = region
        self.mode = mode
        self.backend = backend
        self.energy = LocalEnergy(family, region, mode)
        self.gaussian: GaussianMeasureData | None = None
        self.grid: GridMeasureData | None = None
        self.run = None
        if backend == "gaussian":
            mean, cov = self.energy.gaussian()
            self.gaussian = GaussianMeasureData(region.sites, mean, cov, 2.0 * self.energy.Q)
        elif backend == "grid":
            if grid_spec is None:
                centers = None
                if self.energy.is_bilinear:
                    centers = self.energy.gaussian()[0]
                grid_spec = GridSpec.default(len(region), convexity_B(family), centers)
            self.grid = GridMeasureData(self.energy, grid_spec, scheme=grid_scheme)
        else:
            self.mcmc = mcmc or McmcConfig()
            self.run = run_mala(self.energy, self.mcmc)

    @property
    def sites(self) -> tuple[Site, ...]:
        return self.region.sites

    def _columns(self, sites) -> np.ndarray:
        idx = self.region.index()
        try:
            return np.array([idx[s] for s in sites], dtype=int)
        except KeyError as e:
            raise KeyError(f"unassigned site {e.args[0]}") from None

    def _points(self):
        if self.grid is not None:
            return self.grid.x
        return self.run.draws

    def evaluate(self, f, x) -> np.ndarray:
        """Values of f at region configurations x (..., |region|)."""
        if isinstance(f, (QuadExp, QuadPoly, LocalFunction)):
            return f(x[..., self._columns(f.sites)])
        if callable(f):
            return f(x)
        return np.full(x.shape[:-1], f)

    # -- expectations --------------------------------------------------------
    def expect(self, f):
        """E f; MCMC returns an :class:`Estimate`."""
        if self.backend == "gaussian":
            if isinstance(f, QuadExp):
                return expect_quadexp(self.gaussian, f)
            if isinstance(f, QuadPoly):
                return expect_poly(self.gaussian, f)
            if isinstance(f, LocalFunction):
                return expect_callable(self.gaussian, f.sites, f.fn)
            if callable(f):
                return expect_callable(self.gaussian, self.sites, f)
            return complex(f)
        vals = self.evaluate(f, self._points())
        if self.backend == "grid":
            return self.grid.expect(vals)
        return batch_means(np.real(vals))

    def _value(self, e):
        return e.value if isinstance(e, Estimate) else e

    def covariance(self, f, g) -> complex:
        """E(f; g) = E[f g] - E f E g."""
        if (self.backend == "gaussian" and isinstance(f, QuadPoly) and isinstance(g, QuadPoly)
                and not f.M.any() and not g.M.any()):
            sites = tuple(sorted(set(f.sites) | set(g.sites)))
            fe, ge = f.embed(sites), g.embed(sites)
            cov = self.gaussian.marginal(sites).cov
            return fe.v @ cov @ ge.v
        if self.backend == "gaussian":
            sites = tuple(sorted(set(_support(f, self.sites)) | set(_support(g, self.sites))))
            cf, cg = _restrict(f, sites), _restrict(g, sites)
            fg = expect_callable(self.gaussian, sites, lambda x: cf(x) * cg(x))
            return fg - self.expect(f) * self.expect(g)
        pts = self._points()
        fv, gv = self.evaluate(f, pts), self.evaluate(g, pts)
        if self.backend == "grid":
            return self.grid.expect(fv * gv) - self.grid.expect(fv) * self.grid.expect(gv)
        return float(np.mean(fv * gv) - np.mean(fv) * np.mean(gv))

    def variance(self, f) -> float:
        if isinstance(f, QuadPoly) and np.isrealobj(f.M) and np.isrealobj(f.v):
            return float(np.real(self.covariance(f, f)))
        if self.backend == "gaussian":
            sites = _support(f, self.sites)
            cf = _restrict(f, sites)
            m2 = expect_callable(self.gaussian, sites, lambda x: np.abs(cf(x)) ** 2)
            return float(np.real(m2 - abs(self.expect(f)) ** 2))
        fv = self.evaluate(f, self._points())
        if self.backend == "grid":
            return float(self.grid.expect(np.abs(fv) ** 2) - abs(self.grid.expect(fv)) ** 2)
        return float(np.mean(np.abs(fv) ** 2) - abs(np.mean(fv)) ** 2)

    def entropy(self, f, floor: float = 1e-30) -> float:
        """E(|f|^2 log(|f|^2 / E|f|^2))."""
        if self.backend == "gaussian" and isinstance(f, QuadExp):
            g = f.abs2()
            Eg = float(np.real(expect_quadexp(self.gaussian, g)))
            if Eg <= 0:
                raise ValueError("entropy needs positive mass")
            logg = QuadPoly(g.sites, -0.5 * g.A, g.b, g.c)
            Eglogg = float(np.real(expect_quadexp_poly(self.gaussian, g, logg)))
            return Eglogg - Eg * np.log(Eg)
        if self.backend == "gaussian":
            sites = _support(f, self.sites)
            cf = _restrict(f, sites)

            def xlogx(x):
                r = np.abs(cf(x)) ** 2
                with np.errstate(divide="ignore", invalid="ignore"):
                    return np.where(r > 0, r * np.log(r), 0.0)

            Eg = float(np.real(expect_callable(self.gaussian, sites, lambda x: np.abs(cf(x)) ** 2)))
            return float(np.real(expect_callable(self.gaussian, sites, xlogx))) - Eg * np.log(Eg)
        r = np.abs(self.evaluate(f, self._points())) ** 2
        if self.backend == "grid":
            mass = self.grid.expect(r)
            peak = r.max()
            with np.errstate(divide="ignore"):
                lr = np.log(np.maximum(r, floor * peak))
            return float(self.grid.expect(np.where(r > 0, r * (lr - np.log(mass)), 0.0)))
        mass = r.mean()
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.mean(np.where(r > 0, r * np.log(r / mass), 0.0)))

    def dirichlet(self, f) -> float:
        """E |grad f|^2."""
        if self.backend == "gaussian" and isinstance(f, QuadPoly):
            u = QuadPoly(f.sites, 4 * f.M.T @ f.M, 4 * f.M.T @ f.v, f.v @ f.v)
            return float(np.real(expect_poly(self.gaussian, u)))
        if self.backend == "gaussian" and isinstance(f, QuadExp):
            A, b = f.A, f.b
            q = QuadPoly(f.sites, np.real(A.conj().T @ A), -2 * np.real(A.T @ b.conj()),
                         float(np.real(np.vdot(b, b))))
            return float(np.real(expect_quadexp_poly(self.gaussian, f.abs2(), q)))
        if self.backend == "grid" and not isinstance(f, LocalFunction) and not isinstance(f, QuadExp):
            vals = self.evaluate(f, self.grid.x)
            return self.grid.dirichlet(vals)
        sites = _support(f, self.sites)
        cf = _restrict(f, sites)
        if isinstance(f, QuadExp):
            grad = f.grad
        elif isinstance(f, LocalFunction) and f.grad is not None:
            grad = f.grad
        else:
            grad = lambda x: _grad_fd(cf, x)  # noqa: E731
        sq = lambda x: np.sum(np.abs(grad(x)) ** 2, axis=-1)  # noqa: E731
        if self.backend == "gaussian":
            return float(np.real(expect_callable(self.gaussian, sites, sq)))
        if self.backend == "grid":
            return self.grid.dirichlet(self.evaluate(f, self.grid.x))
        return float(np.mean(sq(self.run.draws[..., self._columns(sites)])))

    def generator_apply(self, f: np.ndarray) -> np.ndarray:
        if self.grid is None:
            raise ValueError("generator_apply needs the grid backend")
        return self.grid.generator_apply(f)

    def conditional(self) -> ConditionalGaussian:
        if self.gaussian is None:
            raise ValueError("closed form requires bilinear family")
        return ConditionalGaussian(self.sites, self.gaussian.precision, self.energy.lin)


def _support(f, default) -> tuple[Site, ...]:
    return tuple(f.sites) if hasattr(f, "sites") else tuple(default)


def _restrict(f, sites):
    """Callable of the coordinates ``sites`` evaluating f."""
    if isinstance(f, (QuadExp, QuadPoly, LocalFunction)):
        pos = {s: k for k, s in enumerate(sites)}
        cols = np.array([pos[s] for s in f.sites], dtype=int)
        return lambda x: f(x[..., cols])
    if callable(f):
        return f
    return lambda x: np.full(x.shape[:-1], f)


def build_measure(family: InteractionFamily, region: Region, mode=INTERIOR,
                  backend: str = "gaussian", **kw) -> LocalGibbsMeasure:
    return LocalGibbsMeasure(family, region, mode, backend, **kw)


# -- coefficients -------------------------------------------------------------

def lsi_coefficient_BE(family: InteractionFamily) -> float:
    """c = 2 / rho with rho a lower bound on the Hessian of U, uniform in the region."""
    rho = hessian_lower_bound(family)
    if rho <= 0:
        raise ValueError("Bakry–Émery inapplicable")
    return 2.0 / rho


def spectral_gap_coefficient(m: LocalGibbsMeasure, degree: int = 4) -> float:
    """Measured sup Var f / E|grad f|^2.

    Gaussian backend: maximised over polynomials of the given degree in each
    coordinate separately (moments by Gauss-Hermite, exact for polynomials).
    Grid backend: inverse of the smallest nonzero eigenvalue of -L.
    """
    if m.backend == "grid":
        ev = np.linalg.eigvalsh(m.grid.dense_H())
        return float(1.0 / ev[1])
    if m.backend != "gaussian":
        raise ValueError("spectral gap needs the gaussian or grid backend")
    n = len(m.sites)
    basis = [(k, p) for k in range(n) for p in range(1, degree + 1)]
    z, w = np.polynomial.hermite_e.hermegauss(max(degree + 2, 8))
    w = w / np.sqrt(2 * np.pi)
    Z = np.stack(np.meshgrid(z, z, indexing="ij"), -1).reshape(-1, 2)
    W = np.outer(w, w).ravel()
    mean, cov = m.gaussian.mean, m.gaussian.cov
    V = np.zeros((len(basis), len(basis)))
    D = np.zeros_like(V)
    for a, (i, p) in enumerate(basis):
        for b, (j, q) in enumerate(basis):
            if i == j:
                xi = xj = mean[i] + np.sqrt(cov[i, i]) * z
                ww = w
            else:
                sub = [i, j]
                X = mean[sub] + Z @ np.linalg.cholesky(cov[np.ix_(sub, sub)]).T
                xi, xj, ww = X[:, 0], X[:, 1], W
            V[a, b] = np.sum(ww * xi ** p * xj ** q) - np.sum(ww * xi ** p) * np.sum(ww * xj ** q)
            if i == j:
                D[a, b] = np.sum(ww * p * q * xi ** (p - 1) * xj ** (q - 1))
    ev = scipy.linalg.eigh(V, D, eigvals_only=True)
    return float(ev[-1])


def lsi_ratio(m: LocalGibbsMeasure, f) -> float:
    """Ent(|f|^2) / E|grad f|^2 for one test function."""
    d = m.dirichlet(f)
    return m.entropy(f) / d if d > 0 else 0.0


@dataclass
class InequalityRow:
    label: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def passed(self, tol: float = 1e-10) -> bool:
        return self.slack >= -tol


def check_sgi_from_lsi(m: LocalGibbsMeasure, c_ls: float, tests: dict) -> list[InequalityRow]:
    """Var f <= (c_LS / 2) E|grad f|^2 for each named test function."""
    return [InequalityRow(name, m.variance(f), 0.5 * c_ls * m.dirichlet(f)) for name, f in tests.items()]


# -- DLR, Herbst, mixing -------------------------------------------------------

def conditional_expectation(ambient: LocalGibbsMeasure, region: Region, f):
    """E_region f under the ambient measure (Gaussian backend, closed-form classes)."""
    cg = ambient.conditional()
    X = tuple(s for s in region.sites if s in ambient.region)
    if isinstance(f, QuadExp):
        return cg.quadexp(f, X)
    if isinstance(f, QuadPoly):
        return cg.poly(f, X)
    raise ValueError("unsupported integrand class")


def check_dlr(ambient: LocalGibbsMeasure, region: Region, f, tol: float = 1e-10):
    """|mu(E_region f) - mu(f)| and whether it is within tolerance."""
    if ambient.backend == "mcmc":
        raise ValueError("DLR on the sampling backend needs check_dlr_sampled")
    g = conditional_expectation(ambient, region, f)
    res = abs(ambient.expect(g) - ambient.expect(f))
    return float(res), bool(res < tol)


@dataclass
class HerbstResult:
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def passed(self, tol: float = 1e-8) -> bool:
        return self.slack >= -tol


def herbst_check(m: LocalGibbsMeasure, g, a: float, eps: float, c_lsi: float) -> HerbstResult:
    """log E e^{eps g} <= 2 eps E g for |grad g|^2 <= a g and eps < 1/(a c)."""
    if not 0 < eps < 1.0 / (a * c_lsi):
        raise ValueError("eps outside (0, 1/(a c))")
    if m.backend == "gaussian" and isinstance(g, QuadPoly):
        eg = QuadExp(g.sites, -2 * eps * g.M, eps * g.v, eps * g.k)
        lhs = float(np.real(np.log(expect_quadexp(m.gaussian, eg))))
    else:
        lhs = float(np.log(np.real(m._value(m.expect(LocalFunction(_support(g, m.sites),
                                                                  lambda x: np.exp(eps * _restrict(g, _support(g, m.sites))(x))))))))
    rhs = float(2 * eps * np.real(m._value(m.expect(g))))
    return HerbstResult(lhs, rhs)


@dataclass
class MixingReport:
    r: np.ndarray
    cov: np.ndarray
    rate: float
    prefactor: float
    monotone: bool


def mixing_decay(m: LocalGibbsMeasure, pairs: Sequence[tuple[int, object, object]]) -> MixingReport:
    """|E(f_r; g_r)| against separation r with a least-squares exponential fit."""
    rs = np.array([p[0] for p in pairs], dtype=float)
    cov = np.array([abs(m.covariance(f, g)) for _, f, g in pairs])
    keep = (rs >= 1) & (cov > 0)
    rate, pref = float("nan"), float("nan")
    if keep.sum() >= 2:
        slope, icpt = np.polyfit(rs[keep], np.log(cov[keep]), 1)
        rate, pref = -slope, float(np.exp(icpt))
    order = np.argsort(rs)
    c = cov[order][rs[order] >= 1]
    monotone = bool(np.all(np.diff(c) < 0)) if c.size > 1 else True
    return MixingReport(rs, cov, rate, pref, monotone)


# -- density ratio --------------------------------------------------------------

def density_ratio_constant(family: InteractionFamily) -> float:
    """B_1 = exp(4 sup_k sum_{X containing k, |X|>=2} sup|J_X|), one-dimensional lattices."""
    if family.d != 1:
        raise ValueError("bound restricted to one-dimensional lattice")
    for s in family._reference_sites():
        if family.neighbours(s):
            raise ValueError("density ratio unbounded for bilinear boundary couplings")
    total = 0.0
    if family.epsilon != 0.0:
        total = abs(family.epsilon) * sum(t.sup * t.size for t in family.perturbations if t.size >= 2)
    return float(np.exp(4 * total))


@dataclass
class DensityRatioReport:
    bound: float
    rho_min: float
    rho_max: float

    @property
    def passed(self) -> bool:
        return 1.0 / self.bound <= self.rho_min and self.rho_max <= self.bound


def density_ratio_bound(family: InteractionFamily, region: Region, bc, n_samples: int = 10_000,
                        seed: int = 0, grid_spec: GridSpec | None = None) -> DensityRatioReport:
    """B_1 and the sampled range of dE_region^bc / dE_region^interior.

    Normalisers come from grid quadrature, so the region must be small.
    """
    B1 = density_ratio_constant(family)
    full = LocalEnergy(family, region, bc)
    inner = LocalEnergy(family, region, INTERIOR)
    spec = grid_spec or GridSpec.default(len(region), convexity_B(family))
    logZ_full = GridMeasureData(full, spec).log_norm
    logZ_in = GridMeasureData(inner, spec).log_norm
    rng = np.random.default_rng(seed)
    X = np.asarray(spec.half_widths)
    x = rng.uniform(-1, 1, size=(n_samples, len(region))) * X / 3
    log_rho = -full.value(x) + inner.value(x) - logZ_full + logZ_in
    rho = np.exp(log_rho)
    return DensityRatioReport(B1, float(rho.min()), float(rho.max()))
