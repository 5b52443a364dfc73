"""The sweeping-out operator Pi = E_{2^d-1} ... E_1 E_0 on an ambient box.

E_s is the conditional expectation over the union of the cubes of collection
s (clipped to the box).  Cubes of one collection never interact, so this is
the tensor product of the single-cube conditional expectations.

Two function classes are supported.  Closed-form classes (quadratic
exponentials and quadratic polynomials) are propagated exactly on bilinear
families.  Grid tables on shared Gauss-Legendre nodes handle arbitrary
families on small boxes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gaussian import (ConditionalGaussian, GaussianMeasureData, QuadExp, QuadPoly,
                       expect_callable, expect_quadexp, expect_quadexp_poly)
from .gibbs import LocalGibbsMeasure
from .lattice import CubePartition, Region, Site, build_cube_partition
from .potential import BoundaryCondition, InteractionFamily, LocalEnergy, convexity_B


@dataclass
class CylinderFunction:
    """Values of a function of ``sites`` on the tensor product of shared nodes."""

    sites: tuple[Site, ...]
    table: np.ndarray

    def __post_init__(self):
        self.sites = tuple(self.sites)
        if self.table.ndim != len(self.sites):
            raise ValueError("table rank must equal the number of sites")


def _union_sites(regions) -> tuple[Site, ...]:
    out = set()
    for r in regions:
        out.update(r.sites)
    return tuple(sorted(out))


class PiOperator:
    """Sweeping-out operator for one cube partition on an ambient box."""

    def __init__(self, family: InteractionFamily, box: Region, L: int,
                 bc: BoundaryCondition | None = None, cap: int = 6, nodes: int = 32,
                 max_table: int = 20_000_000):
        self.family = family
        self.box = box
        self.bc = bc or BoundaryCondition()
        self.partition: CubePartition = build_cube_partition(box.d, L, family.R)
        self.cap = cap
        self.nodes = nodes
        self.max_table = max_table
        self.pieces = [self.partition.clipped_cubes(s, box) for s in range(self.partition.n_collections)]
        self.ambient = None
        self._cond = None
        if family.is_bilinear:
            self.ambient = LocalGibbsMeasure(family, box, self.bc, "gaussian")
            self._cond = self.ambient.conditional()
        # shared quadrature nodes for the table path
        m0 = LocalEnergy(family, box, self.bc)
        half = 6.0 / np.sqrt(convexity_B(family))
        center = 0.0
        if m0.is_bilinear:
            center = float(np.mean(m0.gaussian()[0]))
        z, w = np.polynomial.legendre.leggauss(nodes)
        self.x_nodes = center + half * z
        self.w_nodes = half * w

    @property
    def n_collections(self) -> int:
        return self.partition.n_collections

    @property
    def measure(self) -> GaussianMeasureData:
        if self.ambient is None:
            raise ValueError("closed form requires bilinear family")
        return self.ambient.gaussian

    def touched(self, s: int, sites) -> list[Region]:
        """Cubes of collection s meeting the given sites."""
        sites = set(sites)
        return [c for c in self.pieces[s] if sites & set(c.sites)]

    # -- one collection ---------------------------------------------------------
    def apply_Es(self, s: int, f):
        if isinstance(f, (int, float, complex)):
            return f
        cubes = self.touched(s, f.sites)
        if not cubes:
            return f
        X = _union_sites(cubes)
        if isinstance(f, (QuadExp, QuadPoly)):
            if self._cond is None:
                raise ValueError("closed form requires bilinear family")
            return self._cond.quadexp(f, X) if isinstance(f, QuadExp) else self._cond.poly(f, X)
        if isinstance(f, CylinderFunction):
            return self._table_conditional(f, X)
        raise ValueError("unsupported integrand class")

    def apply(self, f):
        for s in range(self.n_collections):
            f = self.apply_Es(s, f)
        return f

    def iterate(self, f, n: int) -> list:
        out = []
        for _ in range(n):
            f = self.apply(f)
            out.append(f)
        return out

    # -- table path --------------------------------------------------------------
    def _table_conditional(self, f: CylinderFunction, X) -> CylinderFunction:
        Xset = set(X)
        halo = Region(X, d=self.box.d).halo(self.family.R).intersection(self.box)
        Y = tuple(sorted(Xset | set(halo.sites)))
        active = tuple(sorted(set(Y) | set(f.sites)))
        rest = tuple(s for s in active if s not in Xset)
        if len(rest) > self.cap:
            raise ValueError("active set too large")
        if self.nodes ** len(active) > self.max_table:
            raise ValueError("active set too large")
        k = len(active)
        pos = {s: a for a, s in enumerate(active)}
        # energy of the terms touching X, on the active tensor grid
        eY = LocalEnergy(self.family, Region(Y, d=self.box.d), self.bc)
        grids = np.meshgrid(*([self.x_nodes] * k), indexing="ij", sparse=False)
        pts = np.stack([grids[pos[s]] for s in Y], axis=-1)
        logdens = -eY.value(pts)
        for s in X:
            shape = [1] * k
            shape[pos[s]] = self.nodes
            logdens = logdens + np.log(self.w_nodes).reshape(shape)
        axes = tuple(pos[s] for s in X)
        logdens = logdens - logdens.max(axis=axes, keepdims=True)
        dens = np.exp(logdens)
        # f broadcast onto the active grid
        src = [pos[s] for s in f.sites]
        order = np.argsort(src)
        ft = np.transpose(f.table, order)
        shape = [1] * k
        for a in sorted(src):
            shape[a] = self.nodes
        ft = ft.reshape(shape)
        num = np.sum(dens * ft, axis=axes)
        den = np.sum(dens, axis=axes)
        return CylinderFunction(rest, num / den)

    def table_expect(self, f: CylinderFunction) -> float:
        """Ambient-box expectation of a table (integrates the whole box)."""
        g = self._table_conditional(f, self.box.sites)
        return float(np.asarray(g.table))

    def tabulate(self, sites, fn) -> CylinderFunction:
        k = len(sites)
        grids = np.meshgrid(*([self.x_nodes] * k), indexing="ij")
        return CylinderFunction(tuple(sites), fn(np.stack(grids, axis=-1)))


# -- closed-form measurements ---------------------------------------------------------

def _value(f, x, sites_index) -> np.ndarray:
    if isinstance(f, (int, float, complex)):
        return np.full(x.shape[0], f)
    cols = np.array([sites_index[s] for s in f.sites], dtype=int)
    return f(x[:, cols])


def check_dlr_pi(pi: PiOperator, f) -> float:
    g = pi.apply(f)
    return float(abs(_expect(pi.measure, g) - _expect(pi.measure, f)))


def _expect(gm: GaussianMeasureData, f):
    if isinstance(f, QuadExp):
        return expect_quadexp(gm, f)
    if isinstance(f, QuadPoly):
        from .gaussian import expect_poly
        return expect_poly(gm, f)
    return f


def site_dirichlet(gm: GaussianMeasureData, f: QuadExp, site: Site | None = None) -> float:
    """mu|d_site f|^2 (or the full mu|grad f|^2 when site is None) for real f."""
    A, b = np.real(f.A), np.real(f.b)
    if site is None:
        q = QuadPoly(f.sites, A.T @ A, -2 * A.T @ b, b @ b)
    else:
        if site not in f.sites:
            return 0.0
        k = f.sites.index(site)
        a = A[k]
        q = QuadPoly(f.sites, np.outer(a, a), -2 * b[k] * a, b[k] ** 2)
    return float(np.real(expect_quadexp_poly(gm, f.abs2(), q)))


def gamma_ratio(pi: PiOperator, f: QuadExp) -> float:
    """mu|grad (Pi|f|^2)^{1/2}|^2 / mu|grad f|^2."""
    if not any(s in pi.box for s in f.sites):
        return 1.0   # Pi leaves f untouched, so the ratio is exactly 1
    gm = pi.measure
    den = site_dirichlet(gm, f)
    if den == 0:
        return 0.0
    h = pi.apply(f.abs2())
    if not isinstance(h, QuadExp) or not h.sites:
        return 0.0
    return site_dirichlet(gm, h.sqrt()) / den


def estimate_gamma(pi: PiOperator, tests: list[QuadExp]) -> float:
    return max(gamma_ratio(pi, f) for f in tests)


def default_gamma_tests(pi: PiOperator, window: int | None = None, seed: int = 0,
                        n_random: int = 8) -> list[QuadExp]:
    """Log-affine coordinate tests over one period near the centre plus random bumps."""
    centre = pi.box.sites[len(pi.box) // 2][0]
    span = window or pi.partition.period
    sites = [(centre + k,) for k in range(-span // 2, span // 2 + 1) if (centre + k,) in pi.box]
    tests = [QuadExp.exp_affine([s], [1.0]) for s in sites]
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        k = rng.integers(2, 5)
        start = rng.integers(0, len(sites) - k)
        sub = sites[start:start + k]
        a = rng.normal(size=k)
        Araw = rng.normal(size=(k, k)) * 0.2
        tests.append(QuadExp(sub, Araw @ Araw.T, a, 0.0))
    return tests


@dataclass
class EntropyBound:
    lhs: float
    dirichlet: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.dirichlet if self.dirichlet > 0 else 0.0


def _xlogx(gm: GaussianMeasureData, g: QuadExp) -> float:
    logg = QuadPoly(g.sites, -0.5 * g.A, g.b, g.c)
    return float(np.real(expect_quadexp_poly(gm, g, logg)))


def _xlogx_poly(gm: GaussianMeasureData, q: QuadPoly) -> float:
    if not q.sites:
        k = float(np.real(q.k))
        return k * np.log(k) if k > 0 else 0.0

    def xlogx(x):
        r = np.real(q(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r > 0, r * np.log(r), 0.0)

    return float(np.real(expect_callable(gm, q.sites, xlogx)))


def pi_entropy_bound(pi: PiOperator, f) -> EntropyBound:
    """mu(Pi(|f|^2 log|f|^2) - Pi|f|^2 log Pi|f|^2) against mu|grad f|^2.

    The first term uses mu Pi = mu on |f|^2 log|f|^2.  ``f`` is a real or
    complex QuadExp, or a real affine QuadPoly (then |f|^2 stays quadratic
    and the x log x integrals go through Gauss-Hermite quadrature).
    """
    gm = pi.measure
    if isinstance(f, QuadPoly):
        if f.M.any() or np.iscomplexobj(f.v) and np.abs(f.v.imag).any():
            raise ValueError("unsupported integrand class")
        v, k = np.real(f.v), float(np.real(f.k))
        g = QuadPoly(f.sites, np.outer(v, v), 2 * k * v, k * k)
        h = pi.apply(g)
        return EntropyBound(_xlogx_poly(gm, g) - _xlogx_poly(gm, h), float(v @ v))
    g = f.abs2()
    h = pi.apply(g)
    if not isinstance(h, QuadExp):
        h = QuadExp.constant(float(np.real(h)))
    lhs = _xlogx(gm, g) - (_xlogx(gm, h) if h.sites else float(np.real(np.exp(h.c) * h.c)))
    return EntropyBound(lhs, site_dirichlet(gm, f))


@dataclass
class IterationReport:
    n: np.ndarray
    sup_diff: np.ndarray
    l2_diff: np.ndarray
    target: float
    ratio: float


def iterate_pi(pi: PiOperator, f, n: int, n_probes: int = 16, seed: int = 0) -> IterationReport:
    """|Pi^k f - mu f| on probe configurations drawn from mu, k = 1..n."""
    gm = pi.measure
    target = float(np.real(_expect(gm, f)))
    rng = np.random.default_rng(seed)
    Lc = np.linalg.cholesky(gm.cov)
    probes = gm.mean + rng.standard_normal((n_probes, len(gm.sites))) @ Lc.T
    index = {s: k for k, s in enumerate(gm.sites)}
    sup, l2 = [], []
    for g in pi.iterate(f, n):
        v = np.real(_value(g, probes, index)) - target
        sup.append(float(np.abs(v).max()))
        if isinstance(g, QuadPoly) and not g.M.any():
            sub = gm.marginal(g.sites) if g.sites else None
            var = float(g.v @ sub.cov @ g.v) if sub is not None else 0.0
            l2.append(np.sqrt(var + (float(np.real(_expect(gm, g))) - target) ** 2))
        else:
            l2.append(float(np.sqrt(np.mean(v ** 2))))
    sup, l2 = np.array(sup), np.array(l2)
    ns = np.arange(1, n + 1)
    pos = sup > 0
    ratio = float(np.exp(np.polyfit(ns[pos], np.log(sup[pos]), 1)[0])) if pos.sum() >= 2 else 0.0
    return IterationReport(ns, sup, l2, target, ratio)


@dataclass
class SweepRow:
    j: Site
    distance: int
    alpha: float


@dataclass
class SweepReport:
    rows: list
    rate: float
    prefactor: float
    cube_size: int

    @property
    def envelope_holds(self) -> bool:
        return all(r.alpha <= self.prefactor * self.cube_size * np.exp(-self.rate * r.distance) * (1 + 1e-9)
                   for r in self.rows)


def sweeping_coefficients(pi: PiOperator, cube: Region, f: QuadExp, sites) -> SweepReport:
    """alpha_j = mu|d_j (E_cube |f|^2)^{1/2}|^2 / sum_i mu|d_i f|^2 for j outside the cube."""
    gm = pi.measure
    cg = ConditionalGaussian(gm.sites, gm.precision, gm.linear)
    total = site_dirichlet(gm, f)
    h = cg.quadexp(f.abs2(), cube.sites).sqrt()
    centre = np.mean([s[0] for s in f.sites])
    rows = []
    for j in sites:
        if j in cube:
            continue
        a = site_dirichlet(gm, h, j) / total if total > 0 else 0.0
        rows.append(SweepRow(j, int(round(abs(j[0] - centre))), a))
    d = np.array([r.distance for r in rows], dtype=float)
    al = np.array([r.alpha for r in rows])
    pos = al > 0
    rate, pref = float("nan"), float("nan")
    if pos.sum() >= 2:
        rate = float(-np.polyfit(d[pos], np.log(al[pos]), 1)[0])
        pref = float(np.max(al[pos] * np.exp(rate * d[pos])) / len(pi.partition.base))
    return SweepReport(rows, rate, pref, len(pi.partition.base))


def write_rows(path: Path, rows) -> None:
    """``experiment,param,L,n,value`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["experiment", "param", "L", "n", "value"])
        for r in rows:
            w.writerow([r[0], r[1], r[2], r[3], format(float(r[4]), ".17g")])
