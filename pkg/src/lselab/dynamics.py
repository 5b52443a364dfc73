"""Time integration of the logarithmic Schrödinger flow.

Gibbs form:  i d_t phi = -L phi + lam * phi * log(|phi|^2 / m|phi|^2)
Flat form:   i d_t psi = -Lap psi + V psi + lam * psi * log|psi|^2 (optionally
             with |psi|^2 divided by its integral)

The two are related by psi = phi e^{-U/2}; with normalised Gibbs measures
they differ by the global phase exp(i lam log Z t).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .gaussian import GaussianMeasureData, QuadExp, expect_quadexp
from .grid import GridMeasureData, GridSpec, apply_lines
from .lattice import Region, Site, dist
from .potential import INTERIOR, InteractionFamily, LocalEnergy, derivative_bound_A


class SolverDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    T: float = 1.0
    lam: float = 0.5
    log_floor: float = 1e-30
    sample_every: int = 1
    check_unitarity: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class ObservableSeries:
    sites: tuple[Site, ...]
    t: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    kinetic: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    grad: list = field(default_factory=list)

    def append(self, t, mass, grad, entropy, lam):
        grad = np.asarray(grad, dtype=float)
        kin = float(grad.sum())
        self.t.append(float(t))
        self.mass.append(float(mass))
        self.kinetic.append(kin)
        self.entropy.append(float(entropy))
        self.energy.append(kin + lam * float(entropy))
        self.grad.append(grad)

    def arrays(self) -> dict[str, np.ndarray]:
        out = {k: np.asarray(getattr(self, k)) for k in ("t", "mass", "kinetic", "entropy", "energy")}
        out["grad"] = np.asarray(self.grad)
        return out

    def drift(self, name: str) -> float:
        v = np.asarray(getattr(self, name))
        scale = abs(v[0]) if v[0] != 0 else 1.0   # absolute drift when the start value is 0
        return float(np.max(np.abs(v - v[0])) / scale)

    def to_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mass", "kinetic", "entropy", "energy"]
                       + [f"grad_{','.join(map(str, s))}" for s in self.sites])
            for k in range(len(self.t)):
                row = [self.t[k], self.mass[k], self.kinetic[k], self.entropy[k], self.energy[k]]
                row += list(self.grad[k])
                w.writerow([format(v, ".17g") for v in row])


# -- grid waves ----------------------------------------------------------------

@dataclass
class GridWave:
    """Gibbs-form wave stored as psi = sqrt(w) phi on the measure's grid."""

    measure: GridMeasureData
    psi: np.ndarray

    @classmethod
    def from_phi(cls, measure: GridMeasureData, phi) -> GridWave:
        phi = phi(measure.x) if callable(phi) else np.asarray(phi)
        phi = np.broadcast_to(phi, measure.shape).astype(complex)
        return cls(measure, measure.to_psi(phi))

    @property
    def phi(self) -> np.ndarray:
        return self.measure.to_phi(self.psi)


def grid_observables(psi: np.ndarray, gm: GridMeasureData, floor: float = 1e-30):
    """(mass, per-axis gradient norms, entropy) of a half-density wave."""
    return float(np.sum(np.abs(psi) ** 2)), gm.grad_norms(psi), gm.entropy_psi(psi, floor)


def _cayley(H: np.ndarray, tau: float) -> np.ndarray:
    I = np.eye(H.shape[-1])[None]
    return np.linalg.solve(I + 0.5j * tau * H, I - 0.5j * tau * H)


def _linear_sequence(n_axes: int, dt: float) -> list[tuple[int, float]]:
    """Symmetric composition of the per-axis substeps."""
    if n_axes == 1:
        return [(0, dt)]
    inner = [(a + 1, t) for a, t in _linear_sequence(n_axes - 1, dt)]
    return [(0, dt / 2)] + inner + [(0, dt / 2)]


def evolve_grid(f: GridWave, cfg: SolverConfig, direction: int = 1):
    """Strang splitting: nonlinear half step, Crank-Nicolson linear step, half step."""
    gm = f.measure
    dt = direction * cfg.dt
    lam = cfg.lam
    seq = _linear_sequence(gm.ndim, dt)
    cache = {}
    for a, tau in seq:
        if (a, tau) not in cache:
            cache[(a, tau)] = _cayley(gm.H[a], tau)

    psi = f.psi.astype(complex).copy()
    series = ObservableSeries(tuple(gm.energy.region.sites))
    m0, g0, e0 = grid_observables(psi, gm, cfg.log_floor)
    if m0 <= 0:
        raise ValueError("initial wave has zero mass")
    series.append(0.0, m0, g0, e0, lam)

    def half_nonlinear(p):
        mass = np.sum(np.abs(p) ** 2)
        lphi = np.maximum(gm.log_abs2_phi(p), np.log(cfg.log_floor * mass))
        return p * np.exp(-0.5j * lam * dt * (lphi - np.log(mass)))

    n = cfg.steps
    for step in range(1, n + 1):
        psi = half_nonlinear(psi)
        for a, tau in seq:
            before = np.sum(np.abs(psi) ** 2) if cfg.check_unitarity else None
            psi = apply_lines(cache[(a, tau)], psi, a)
            if cfg.check_unitarity:
                after = np.sum(np.abs(psi) ** 2)
                if abs(after - before) > 1e-13 * before:
                    raise SolverDiverged(f"solver diverged: unitarity lost at step {step}")
        psi = half_nonlinear(psi)
        mass = np.sum(np.abs(psi) ** 2)
        if not np.isfinite(mass) or mass < 1e-300:
            raise SolverDiverged(f"solver diverged at step {step}")
        if step % cfg.sample_every == 0 or step == n:
            m, g, e = grid_observables(psi, gm, cfg.log_floor)
            series.append(step * dt, m, g, e, lam)
    return GridWave(gm, psi), series


# -- flat form ------------------------------------------------------------------

@dataclass
class FlatWave:
    spec: GridSpec
    psi: np.ndarray

    @property
    def cell(self) -> float:
        return float(np.prod(self.spec.h))

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.cell)


def evolve_flat(f: FlatWave, V: np.ndarray, cfg: SolverConfig, normalized: bool = True,
                direction: int = 1):
    """Split-step Fourier: potential and logarithm half steps around an exact kinetic step."""
    spec = f.spec
    dt = direction * cfg.dt
    lam = cfg.lam
    ks = np.meshgrid(*[spec.wavenumbers(a) for a in range(spec.ndim)], indexing="ij")
    k2 = sum(k ** 2 for k in ks)
    kin = np.exp(-1j * dt * k2)
    cell = f.cell
    psi = f.psi.astype(complex).copy()

    def half(p):
        rho = np.abs(p) ** 2
        ref = rho.sum() * cell if normalized else 1.0
        peak = rho.max()
        lr = np.log(np.maximum(rho, cfg.log_floor * peak) / ref)
        return p * np.exp(-0.5j * dt * (V + lam * lr))

    for step in range(1, cfg.steps + 1):
        psi = half(psi)
        psi = np.fft.ifftn(kin * np.fft.fftn(psi))
        psi = half(psi)
        if not np.all(np.isfinite(psi)):
            raise SolverDiverged(f"solver diverged at step {step}")
    return FlatWave(spec, psi)


def spectral_laplacian(spec: GridSpec, psi: np.ndarray) -> np.ndarray:
    ks = np.meshgrid(*[spec.wavenumbers(a) for a in range(spec.ndim)], indexing="ij")
    k2 = sum(k ** 2 for k in ks)
    return np.fft.ifftn(-k2 * np.fft.fftn(psi))


def representation_transform(values: np.ndarray, U: np.ndarray, direction: str) -> np.ndarray:
    """psi = phi e^{-U/2} ("to_flat") or phi = psi e^{U/2} ("to_gibbs")."""
    if direction == "to_flat":
        return values * np.exp(-0.5 * U)
    if direction == "to_gibbs":
        return values * np.exp(0.5 * U)
    raise ValueError(f"unknown direction {direction!r}")


# -- Gaussian ansatz ------------------------------------------------------------------

@dataclass
class GaussianWave:
    """phi(x) = exp(-1/2 x^T A x + b^T x + c) over ``sites`` (Gibbs form).

    ``P`` and ``l`` are the precision and linear term of the reference
    measure, so that grad U = P x + l on these coordinates.
    """

    sites: tuple[Site, ...]
    A: np.ndarray
    b: np.ndarray
    c: complex
    P: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        n = len(self.sites)
        self.A = np.asarray(self.A, dtype=complex).reshape(n, n)
        self.A = 0.5 * (self.A + self.A.T)
        self.b = np.asarray(self.b, dtype=complex).reshape(n)
        self.c = complex(self.c)
        self.P = np.asarray(self.P, dtype=float)
        self.l = np.asarray(self.l, dtype=float)

    @classmethod
    def on_measure(cls, energy: LocalEnergy, A, b=None, c=0.0) -> GaussianWave:
        n = energy.n
        b = np.zeros(n) if b is None else b
        return cls(energy.region.sites, A, b, c, 2.0 * energy.Q, energy.lin)

    @property
    def measure(self) -> GaussianMeasureData:
        return GaussianMeasureData.from_precision(self.sites, self.P, self.l)

    def quadexp(self) -> QuadExp:
        return QuadExp(self.sites, self.A, self.b, self.c)

    def __call__(self, x):
        return self.quadexp()(x)

    def admissible(self) -> bool:
        S = self.P + 2 * self.A.real
        return bool(np.linalg.eigvalsh(0.5 * (S + S.T)).min() > 0)


def gaussian_observables(f: GaussianWave):
    """Closed-form (mass, per-site gradient norms, entropy)."""
    R, beta = f.A.real, f.b.real
    S = f.P + 2 * R
    Sig = np.linalg.inv(S)
    Sig = 0.5 * (Sig + Sig.T)
    nu = Sig @ (-f.l + 2 * beta)
    N = float(np.real(expect_quadexp(f.measure, f.quadexp().abs2())))
    u = f.b - f.A @ nu
    AS = f.A @ Sig @ f.A.conj().T
    grads = N * (np.abs(u) ** 2 + np.real(np.diag(AS)))
    ent = N * (-(nu @ R @ nu + np.trace(R @ Sig)) + 2 * beta @ nu + 2 * f.c.real - np.log(N))
    return N, grads, float(ent)


def _ansatz_rhs(A, b, c, P, l, lam, logN):
    PA = P @ A
    dA = -2j * (A @ A + 0.5 * (PA + PA.T) + lam * A.real)
    db = -1j * (2 * A @ b + P @ b - A @ l + 2 * lam * b.real)
    dc = -1j * (-(b @ b) + np.trace(A) + l @ b + 2 * lam * c.real - lam * logN)
    return dA, db, dc


def evolve_gaussian(f: GaussianWave, cfg: SolverConfig, direction: int = 1,
                    observe: bool = True):
    """RK4 on the closed parameter system; A is re-symmetrised every step."""
    dt = direction * cfg.dt
    lam = cfg.lam
    A, b, c = f.A.copy(), f.b.copy(), f.c
    P, l = f.P, f.l
    gm = f.measure
    series = ObservableSeries(f.sites)

    def logN(A, b, c):
        q = QuadExp(f.sites, 2 * A.real, 2 * b.real, 2 * c.real)
        return float(np.real(np.log(expect_quadexp(gm, q))))

    def rhs(A, b, c):
        return _ansatz_rhs(A, b, c, P, l, lam, logN(A, b, c))

    if not f.admissible():
        raise ValueError("ansatz left admissible set")
    if observe:
        series.append(0.0, *_obs_tuple(f), lam)
    n = cfg.steps
    for step in range(1, n + 1):
        k1 = rhs(A, b, c)
        k2 = rhs(A + 0.5 * dt * k1[0], b + 0.5 * dt * k1[1], c + 0.5 * dt * k1[2])
        k3 = rhs(A + 0.5 * dt * k2[0], b + 0.5 * dt * k2[1], c + 0.5 * dt * k2[2])
        k4 = rhs(A + dt * k3[0], b + dt * k3[1], c + dt * k3[2])
        A = A + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        b = b + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        c = c + dt / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        A = 0.5 * (A + A.T)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.isfinite(c)):
            raise SolverDiverged(f"solver diverged at step {step}")
        cur = GaussianWave(f.sites, A, b, c, P, l)
        if not cur.admissible():
            raise ValueError(f"ansatz left admissible set at step {step}")
        if observe and (step % cfg.sample_every == 0 or step == n):
            series.append(step * dt, *_obs_tuple(cur), lam)
    return GaussianWave(f.sites, A, b, c, P, l), series


def _obs_tuple(f: GaussianWave):
    N, g, e = gaussian_observables(f)
    return N, g, e


# -- checkers -------------------------------------------------------------------

@dataclass
class Check:
    label: str
    measured: float
    bound: float
    passed: bool


def check_conservation(series: ObservableSeries, tol_mass: float = 1e-8,
                       tol_energy: float = 1e-4) -> list[Check]:
    dm, de = series.drift("mass"), series.drift("energy")
    return [Check("mass drift", dm, tol_mass, dm < tol_mass),
            Check("energy drift", de, tol_energy, de < tol_energy)]


def check_bounds(series: ObservableSeries, lam: float, c_lsi: float | None = None,
                 tol: float = 1e-8) -> list[Check]:
    """Gradient and entropy bounds along a trajectory (worst slack reported)."""
    s = series.arrays()
    t, K, H = s["t"], s["kinetic"], s["entropy"]
    K0, H0 = K[0], H[0]
    a = abs(lam)
    grad_bound = np.exp(2 * a * t) * K0
    if a > 0:
        ent_bound = H0 + (np.exp(2 * a * t) - 1) / a * K0
    else:
        ent_bound = H0 + 2 * t * K0
    out = []

    def add(label, lhs, rhs):
        k = int(np.argmin(rhs - lhs))
        out.append(Check(label, float(lhs[k]), float(rhs[k]), bool(np.all(rhs - lhs >= -tol))))

    add("gradient bound", K, grad_bound)
    add("entropy bound", H, ent_bound)
    if lam > 0 and c_lsi is not None:
        add("uniform gradient bound", K, np.full_like(K, (1 + lam * c_lsi) * K0))
        add("uniform entropy bound", H, np.full_like(H, (1 / lam + c_lsi) * K0))
    return out


def propagation_epsilon(family: InteractionFamily, lam: float) -> float:
    A = derivative_bound_A(family)
    rate = 9 * (2 * abs(lam) + A) * (2 * family.R + 1) ** (2 * family.d)
    return 1.0 / rate if rate > 0 else float("inf")


@dataclass
class PropagationRow:
    site: Site
    N: int
    window: float
    max_grad: float
    bound: float

    @property
    def asserted(self) -> bool:
        return self.N >= 1

    @property
    def passed(self) -> bool:
        return self.max_grad <= self.bound if self.asserted else True


@dataclass
class PropagationTable:
    rows: list
    epsilon: float
    decay_rate: float

    def to_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["site", "N_j", "window", "max_grad", "bound", "pass"])
            for r in self.rows:
                w.writerow([",".join(map(str, r.site)), r.N, format(r.window, ".17g"),
                            format(r.max_grad, ".17g"), format(r.bound, ".17g"), int(r.passed)])


def propagation_experiment(family: InteractionFamily, region: Region, f: GaussianWave,
                           support: Region, lam: float, dt: float = 1e-3, n_max: int = 20,
                           t_max: float | None = None) -> PropagationTable:
    """Per-site gradient growth inside the light cone t <= eps N_j.

    ``t_max`` caps the horizon; it is needed when the cone is unbounded
    (no coupling and lam = 0), where it defaults to 1.
    """
    eps = propagation_epsilon(family, lam)
    T = eps * n_max
    if t_max is not None or not np.isfinite(T):
        T = min(T, 1.0 if t_max is None else t_max)
    steps = int(np.ceil(T / dt))
    _, series = evolve_gaussian(f, SolverConfig(dt=dt, T=steps * dt, lam=lam))
    s = series.arrays()
    t, grads = s["t"], s["grad"]
    total0 = s["kinetic"][0]
    rows = []
    for k, j in enumerate(f.sites):
        N = dist(Region([j], d=region.d), support) // family.R
        if N > n_max:
            continue
        window = eps * N if N else 0.0
        sel = t <= window + 1e-12
        rows.append(PropagationRow(j, int(N), window, float(grads[sel, k].max()),
                                   float(np.exp(-N) * total0)))
    Ns = np.array([r.N for r in rows if r.asserted and r.max_grad > 0])
    mg = np.array([r.max_grad for r in rows if r.asserted and r.max_grad > 0])
    rate = float(-np.polyfit(Ns, np.log(mg), 1)[0]) if len(Ns) >= 2 else float("nan")
    return PropagationTable(rows, eps, rate)


@dataclass
class VolumeConvergence:
    n: np.ndarray
    masses: np.ndarray
    initial: float

    @property
    def differences(self) -> np.ndarray:
        return np.abs(np.diff(self.masses))


def volume_convergence(family: InteractionFamily, ambient: GaussianMeasureData,
                       make_wave: Callable[[LocalEnergy], GaussianWave], lam: float,
                       n_max: int = 4, L: int = 1, T: float = 1.0, dt: float = 1e-3
                       ) -> VolumeConvergence:
    """mu|phi_n|^2 for interior solves on [-8nL, 8nL], mu the ambient Gaussian."""
    masses = []
    initial = None
    for n in range(1, n_max + 1):
        region = Region.interval(-8 * n * L, 8 * n * L)
        energy = LocalEnergy(family, region, INTERIOR)
        f = make_wave(energy)
        if initial is None:
            initial = float(np.real(expect_quadexp(ambient, f.quadexp().abs2())))
        phi, _ = evolve_gaussian(f, SolverConfig(dt=dt, T=T, lam=lam), observe=False)
        masses.append(float(np.real(expect_quadexp(ambient, phi.quadexp().abs2()))))
    return VolumeConvergence(np.arange(1, n_max + 1), np.array(masses), initial)
