"""Finite-range interaction families.

Bilinear coefficients are stored per *unordered* pair: the pair {i, j} with
i != j contributes C_ij x_i x_j once, the diagonal contributes C_ii x_i^2.
Under this convention the mixed derivative d_i d_j U equals C_ij.  The
helper :func:`chain_family` instead takes symmetric-matrix entries
(U = x^T M x), which doubles the off-diagonal pair coefficient.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .lattice import Region, Site, as_site, site_dist


class BoundaryCondition:
    """Finitely supported configuration fixed outside a region; zero elsewhere."""

    def __init__(self, values: Mapping | None = None):
        self.values = {as_site(k): float(v) for k, v in (values or {}).items()}

    def get(self, site: Site) -> float:
        return self.values.get(site, 0.0)

    def __repr__(self) -> str:
        return f"BoundaryCondition({self.values})"


class _Interior:
    """Marker for the interior ("circle") mode: only terms strictly inside."""

    def __repr__(self) -> str:
        return "INTERIOR"


INTERIOR = _Interior()


@dataclass(frozen=True)
class PerturbationTemplate:
    """A bounded multi-site term W_X translated to every lattice site.

    ``offsets`` lists the sites of X relative to the translation point.  The
    sup-bounds are declared by the caller (entries of the gradient and the
    Hessian are each bounded by ``sup_grad`` and ``sup_hess``).
    """

    offsets: tuple[Site, ...]
    value: Callable
    grad: Callable
    hess: Callable
    sup: float
    sup_grad: float
    sup_hess: float
    name: str = "W"

    @property
    def size(self) -> int:
        return len(self.offsets)

    def diam(self) -> int:
        return max(site_dist(a, b) for a in self.offsets for b in self.offsets)


def cos_sum(amplitude: float, d: int = 1) -> tuple[PerturbationTemplate, ...]:
    """W_X(x) = amplitude * cos(sum_{j in X} x_j) on every nearest-neighbour pair."""
    a = float(amplitude)

    def value(x):
        return a * np.cos(x.sum(axis=-1))

    def grad(x):
        s = -a * np.sin(x.sum(axis=-1))
        return np.repeat(s[..., None], x.shape[-1], axis=-1)

    def hess(x):
        c = -a * np.cos(x.sum(axis=-1))
        k = x.shape[-1]
        return c[..., None, None] * np.ones((k, k))

    out = []
    for axis in range(d):
        e = tuple(1 if n == axis else 0 for n in range(d))
        out.append(PerturbationTemplate(((0,) * d, e), value, grad, hess,
                                        sup=abs(a), sup_grad=abs(a), sup_hess=abs(a),
                                        name=f"cos_sum[{axis}]"))
    return tuple(out)


BUILTIN_PERTURBATIONS = {"cos_sum": cos_sum}


def _canonical_offset(o: Site) -> Site:
    for c in o:
        if c > 0:
            return o
        if c < 0:
            return tuple(-x for x in o)
    return o


@dataclass(frozen=True, eq=False)
class InteractionFamily:
    """Bilinear couplings plus optional bounded perturbations, range ``R``.

    ``bonds`` maps a lattice offset to a translation-invariant pair coefficient;
    ``pairs`` overrides coefficients for explicit site pairs (including i == j).
    """

    d: int = 1
    R: int = 1
    diag: float = 1.0
    bonds: Mapping[Site, float] = field(default_factory=dict)
    pairs: Mapping[tuple[Site, Site], float] = field(default_factory=dict)
    perturbations: tuple[PerturbationTemplate, ...] = ()
    epsilon: float = 0.0

    def __post_init__(self):
        if self.d < 1 or self.R < 1:
            raise ValueError("dimension and range must be >= 1")
        bonds = {}
        for o, c in self.bonds.items():
            o = _canonical_offset(as_site(o, self.d))
            if max(abs(v) for v in o) > self.R:
                raise ValueError(f"bond offset {o} exceeds range {self.R}")
            if all(v == 0 for v in o):
                raise ValueError("use `diag` for the on-site coefficient")
            bonds[o] = bonds.get(o, 0.0) + float(c)
        pairs = {}
        for (i, j), c in self.pairs.items():
            i, j = as_site(i, self.d), as_site(j, self.d)
            if site_dist(i, j) > self.R:
                raise ValueError(f"pair {i},{j} exceeds range {self.R}")
            pairs[(min(i, j), max(i, j))] = float(c)
        for t in self.perturbations:
            if t.diam() > self.R:
                raise ValueError(f"perturbation {t.name} exceeds range {self.R}")
            for b in (t.sup, t.sup_grad, t.sup_hess):
                if not np.isfinite(b):
                    raise ValueError("declared perturbation bounds must be finite")
        object.__setattr__(self, "bonds", bonds)
        object.__setattr__(self, "pairs", pairs)

    # -- coefficients -------------------------------------------------------
    @property
    def is_bilinear(self) -> bool:
        return self.epsilon == 0.0 or not self.perturbations

    def coef(self, i: Site, j: Site) -> float:
        key = (min(i, j), max(i, j))
        if key in self.pairs:
            return self.pairs[key]
        if i == j:
            return self.diag
        o = tuple(b - a for a, b in zip(i, j))
        if max(abs(v) for v in o) > self.R:
            return 0.0
        return self.bonds.get(_canonical_offset(o), 0.0)

    def _offsets(self):
        return list(itertools.product(range(-self.R, self.R + 1), repeat=self.d))

    def neighbours(self, i: Site) -> list[tuple[Site, float]]:
        """Sites j != i with nonzero pair coefficient."""
        out = []
        for o in self._offsets():
            if all(v == 0 for v in o):
                continue
            j = tuple(a + b for a, b in zip(i, o))
            c = self.coef(i, j)
            if c != 0.0:
                out.append((j, c))
        return out

    def _reference_sites(self) -> list[Site]:
        ref = {(0,) * self.d}
        for i, j in self.pairs:
            ref.add(i)
            ref.add(j)
        return sorted(ref)

    def diag_bounds(self) -> tuple[float, float]:
        vals = [self.coef(s, s) for s in self._reference_sites()]
        return min(vals), max(vals)

    def without_perturbation(self) -> InteractionFamily:
        return InteractionFamily(self.d, self.R, self.diag, dict(self.bonds), dict(self.pairs))

    def compile(self, region: Region, bc=None) -> LocalEnergy:
        return LocalEnergy(self, region, bc)


def chain_family(diag: float = 1.0, offdiag: float = 0.2, *, epsilon: float = 0.0,
                 perturbations: tuple = ()) -> InteractionFamily:
    """Nearest-neighbour chain with U = x^T M x, M tridiagonal (diag, offdiag).

    The pair coefficient is therefore 2*offdiag and the Hessian of U is 2M.
    """
    bonds = {(1,): 2.0 * offdiag} if offdiag else {}
    return InteractionFamily(d=1, R=1, diag=diag, bonds=bonds,
                             perturbations=tuple(perturbations), epsilon=epsilon)


class LocalEnergy:
    """U_Lambda as a vectorised function of the coordinates of ``region``.

    ``bc`` is a :class:`BoundaryCondition` (terms meeting the region, values
    outside read from the boundary) or :data:`INTERIOR` (terms inside only).
    The bilinear part is U = x^T Q x + lin.x.
    """

    def __init__(self, family: InteractionFamily, region: Region, bc=None):
        if region.d != family.d:
            raise ValueError("region and family dimensions differ")
        self.family = family
        self.region = region
        self.interior = bc is INTERIOR
        self.bc = BoundaryCondition() if bc is None else bc
        idx = region.index()
        n = len(region)
        Q = np.zeros((n, n))
        lin = np.zeros(n)
        for a, i in enumerate(region.sites):
            Q[a, a] += family.coef(i, i)
            for j, c in family.neighbours(i):
                if j in idx:
                    Q[a, idx[j]] += 0.5 * c
                elif not self.interior:
                    lin[a] += c * self.bc.get(j)
        self.Q = Q
        self.lin = lin
        self.terms = []
        if family.epsilon != 0.0:
            for t in family.perturbations:
                corners = {tuple(a - b for a, b in zip(i, o)) for i in region.sites for o in t.offsets}
                for k in sorted(corners):
                    X = [tuple(a + b for a, b in zip(k, o)) for o in t.offsets]
                    inside = np.array([s in idx for s in X])
                    if self.interior and not inside.all():
                        continue
                    pos = np.array([idx.get(s, -1) for s in X])
                    fixed = np.array([0.0 if s in idx else self.bc.get(s) for s in X])
                    self.terms.append((t, pos, inside, fixed))

    @property
    def n(self) -> int:
        return len(self.region)

    @property
    def is_bilinear(self) -> bool:
        return not self.terms

    def _local(self, x, pos, inside, fixed):
        xs = np.broadcast_to(fixed, x.shape[:-1] + fixed.shape).copy()
        xs[..., inside] = x[..., pos[inside]]
        return xs

    def value(self, x):
        x = np.asarray(x, dtype=float)
        u = np.einsum("...i,ij,...j->...", x, self.Q, x) + x @ self.lin
        eps = self.family.epsilon
        for t, pos, inside, fixed in self.terms:
            u = u + eps * t.value(self._local(x, pos, inside, fixed))
        return u

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        g = 2.0 * x @ self.Q + self.lin
        eps = self.family.epsilon
        for t, pos, inside, fixed in self.terms:
            gw = t.grad(self._local(x, pos, inside, fixed))
            for a in np.flatnonzero(inside):
                g[..., pos[a]] += eps * gw[..., a]
        return g

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        H = np.broadcast_to(2.0 * self.Q, x.shape[:-1] + self.Q.shape).copy()
        eps = self.family.epsilon
        for t, pos, inside, fixed in self.terms:
            hw = t.hess(self._local(x, pos, inside, fixed))
            ins = np.flatnonzero(inside)
            for a in ins:
                for b in ins:
                    H[..., pos[a], pos[b]] += eps * hw[..., a, b]
        return H

    def laplacian(self, x):
        return np.trace(self.hess(x), axis1=-2, axis2=-1)

    def gaussian(self) -> tuple[np.ndarray, np.ndarray]:
        """(mean, covariance) of e^{-U}; bilinear energies only."""
        if not self.is_bilinear:
            raise ValueError("closed form requires bilinear family")
        P = 2.0 * self.Q
        try:
            L = np.linalg.cholesky(P)
        except np.linalg.LinAlgError:
            raise ValueError("not normalizable") from None
        cov = np.linalg.inv(P)
        cov = 0.5 * (cov + cov.T)
        mean = -np.linalg.solve(P, self.lin) if L is not None else None
        return mean, cov

    def vector(self, x: Mapping) -> np.ndarray:
        try:
            return np.array([float(x[s]) for s in self.region.sites])
        except KeyError as e:
            raise KeyError(f"unassigned site {e.args[0]}") from None


def _coerce_x(x, region: Region):
    if isinstance(x, Mapping):
        return {as_site(k): v for k, v in x.items()}
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != len(region):
        raise KeyError("unassigned site")
    return dict(zip(region.sites, arr))


def energy_U(fam: InteractionFamily, region: Region, bc, x) -> float:
    e = LocalEnergy(fam, region, bc)
    return float(e.value(e.vector(_coerce_x(x, region))))


def grad_U(fam: InteractionFamily, region: Region, bc, x) -> dict[Site, float]:
    e = LocalEnergy(fam, region, bc)
    g = e.grad(e.vector(_coerce_x(x, region)))
    return dict(zip(region.sites, g.tolist()))


def hess_U(fam: InteractionFamily, region: Region, bc, x) -> np.ndarray:
    e = LocalEnergy(fam, region, bc)
    return e.hess(e.vector(_coerce_x(x, region)))


@dataclass
class QuadraticFormV:
    """V(x) = constant + sum_k linear_k x_k + sum_{j,k} quadratic_jk x_j x_k.

    The quadratic sum runs over ordered pairs, so ``quadratic`` is the
    symmetric matrix of the form over ``sites``.
    """

    sites: Region
    constant: float
    linear: np.ndarray
    quadratic: np.ndarray
    range: int

    def __call__(self, x) -> np.ndarray:
        if isinstance(x, Mapping):
            x = np.array([float(x[s]) for s in self.sites.sites])
        x = np.asarray(x, dtype=float)
        return (self.constant + x @ self.linear
                + np.einsum("...i,ij,...j->...", x, self.quadratic, x))

    def coefficient(self, j: Site, k: Site) -> float:
        idx = self.sites.index()
        if j not in idx or k not in idx:
            return 0.0
        return float(self.quadratic[idx[j], idx[k]])


def ground_state_V(fam: InteractionFamily, region: Region, lam: float) -> QuadraticFormV:
    """Potential V with -1/2 Lap U + 1/4 |grad U|^2 + lam U = V for bilinear U.

    Derivatives are taken in the coordinates of ``region``; V is a quadratic
    form in the coordinates of the R-thickened region.
    """
    if not fam.is_bilinear:
        raise ValueError("closed form requires bilinear family")
    big = region.thicken(fam.R)
    idx = big.index()
    n = len(big)
    K = np.zeros((n, n))     # U_region = sum_{(j,k) ordered, j or k in region} K_jk x_j x_k
    for i in big.sites:
        a = idx[i]
        for j in [i] + [s for s, _ in fam.neighbours(i)]:
            if j not in idx:
                continue
            if i in region or j in region:
                c = fam.coef(i, j)
                K[a, idx[j]] = c if i == j else 0.5 * c
    inside = np.array([s in region for s in big.sites])
    touch = inside[:, None] | inside[None, :]
    D = lam * K * touch + K[:, inside] @ K[:, inside].T
    const = -float(np.trace(K[np.ix_(inside, inside)]))
    return QuadraticFormV(big, const, np.zeros(n), 0.5 * (D + D.T), 2 * fam.R)


def ground_state_potential(energy: LocalEnergy, lam: float, x) -> np.ndarray:
    """Pointwise V = -1/2 Lap U + 1/4 |grad U|^2 + lam U for any family."""
    g = energy.grad(x)
    return -0.5 * energy.laplacian(x) + 0.25 * (g * g).sum(axis=-1) + lam * energy.value(x)


def _pair_count(t: PerturbationTemplate) -> int:
    """Max number of translates of a template containing a fixed pair of distinct sites."""
    diffs: dict[Site, int] = {}
    for a in t.offsets:
        for b in t.offsets:
            if a != b:
                o = tuple(y - x for x, y in zip(a, b))
                diffs[o] = diffs.get(o, 0) + 1
    return max(diffs.values(), default=0)


def derivative_bound_A(fam: InteractionFamily) -> float:
    """Uniform bound on |d_i d_j U| over distinct sites."""
    A = 0.0
    for i in fam._reference_sites():
        for _, c in fam.neighbours(i):
            A = max(A, abs(c))
    if fam.epsilon != 0.0:
        A += abs(fam.epsilon) * sum(t.sup_hess * _pair_count(t) for t in fam.perturbations)
    return A


def convexity_B(fam: InteractionFamily) -> float:
    """Lower bound on d_i^2 U, uniform in the site and the region."""
    cmin, _ = fam.diag_bounds()
    B = 2.0 * cmin
    if fam.epsilon != 0.0:
        B -= abs(fam.epsilon) * sum(t.sup_hess * t.size for t in fam.perturbations)
    if B <= 0:
        raise ValueError("strong convexity violated")
    return B


def hessian_lower_bound(fam: InteractionFamily) -> float:
    """Gershgorin lower bound on the smallest eigenvalue of Hess U_Lambda."""
    rho = np.inf
    for i in fam._reference_sites():
        row = 2.0 * fam.coef(i, i) - sum(abs(c) for _, c in fam.neighbours(i))
        rho = min(rho, row)
    if fam.epsilon != 0.0:
        rho -= abs(fam.epsilon) * sum(t.sup_hess * t.size ** 2 for t in fam.perturbations)
    return float(rho)


def parse_family_config(text: str) -> InteractionFamily:
    """Read a family from ``key = value`` / ``pair i j c`` / ``bond o c`` lines.

    Recognised keys: ``dim``, ``range``, ``diag``, ``epsilon``,
    ``convention`` (``pair`` or ``matrix``), ``W = <builtin> <amplitude>``.
    Site and offset coordinates are comma-separated (``pair 0,0 1,0 0.2``).
    """
    d, R, diag, eps = 1, 1, 1.0, 0.0
    convention = "pair"
    pair_lines, bond_lines, pert = [], [], None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        try:
            if "=" in line:
                key, val = (s.strip() for s in line.split("=", 1))
                if key == "dim":
                    d = int(val)
                elif key == "range":
                    R = int(val)
                elif key == "diag":
                    diag = float(val)
                elif key == "epsilon":
                    eps = float(val)
                elif key == "convention":
                    if val not in ("pair", "matrix"):
                        raise ValueError(f"unknown convention {val!r}")
                    convention = val
                elif key == "W":
                    name, amp = val.split()
                    if name not in BUILTIN_PERTURBATIONS:
                        raise ValueError(f"unknown perturbation {name!r}")
                    pert = (name, float(amp))
                else:
                    raise ValueError(f"unknown key {key!r}")
            else:
                parts = line.split()
                if parts[0] == "pair" and len(parts) == 4:
                    pair_lines.append((parts[1], parts[2], float(parts[3])))
                elif parts[0] == "bond" and len(parts) == 3:
                    bond_lines.append((parts[1], float(parts[2])))
                else:
                    raise ValueError(f"cannot parse {line!r}")
        except ValueError as e:
            raise ValueError(f"malformed family config, line {lineno}: {e}") from None

    def site(s):
        return tuple(int(v) for v in s.split(","))

    scale = 2.0 if convention == "matrix" else 1.0
    pairs = {}
    for a, b, c in pair_lines:
        i, j = site(a), site(b)
        pairs[(i, j)] = c if i == j else scale * c
    bonds = {site(o): scale * c for o, c in bond_lines}
    perts = BUILTIN_PERTURBATIONS[pert[0]](pert[1], d) if pert else ()
    return InteractionFamily(d=d, R=R, diag=diag, bonds=bonds, pairs=pairs,
                             perturbations=perts, epsilon=eps)
