"""Tensor grids over R^Lambda and the discrete Dirichlet-form operators on them.

Waves are stored in the half-density variable psi = sqrt(w) * phi, where w are
the normalised node weights of the Gibbs measure.  In that variable the
discrete generator is L = -w^{-1/2} H w^{1/2} with H = sum_a K_a^T K_a, and
K_a psi approximates sqrt(w) * d_a phi.  Two choices of K_a are provided:

``spectral``  Fourier differentiation on a periodic grid, corrected by the
              exact log-derivative -1/2 d_a U of sqrt(w).
``fd``        second-order half-node differences with edge weights
              exp(-(U_k + U_{k+1})/2) (divergence form, zero-flux ends).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .potential import LocalEnergy

DEFAULT_NODES = {1: 128, 2: 64, 3: 32}
TAIL_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic nodes x_k = c - X + h k, k < M, h = 2X/M, per axis."""

    centers: tuple[float, ...]
    half_widths: tuple[float, ...]
    nodes: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.centers) == len(self.half_widths) == len(self.nodes)):
            raise ValueError("grid axes disagree in count")
        if any(m < 4 for m in self.nodes) or any(x <= 0 for x in self.half_widths):
            raise ValueError("grid needs >= 4 nodes and positive half-width per axis")

    @classmethod
    def default(cls, n_sites: int, convexity: float, centers=None, width_factor: float = 12.0,
                nodes: int | None = None) -> GridSpec:
        if n_sites not in DEFAULT_NODES and nodes is None:
            raise ValueError("grid solves support 1 to 3 sites")
        M = nodes or DEFAULT_NODES[n_sites]
        X = width_factor / np.sqrt(convexity)
        c = tuple(float(v) for v in (centers if centers is not None else np.zeros(n_sites)))
        return cls(c, (X,) * n_sites, (M,) * n_sites)

    @property
    def ndim(self) -> int:
        return len(self.nodes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.nodes)

    @property
    def h(self) -> np.ndarray:
        return 2 * np.asarray(self.half_widths) / np.asarray(self.nodes)

    def axis(self, a: int) -> np.ndarray:
        return self.centers[a] - self.half_widths[a] + self.h[a] * np.arange(self.nodes[a])

    def mesh(self) -> np.ndarray:
        """Node coordinates with shape (*shape, ndim)."""
        return np.stack(np.meshgrid(*[self.axis(a) for a in range(self.ndim)], indexing="ij"), axis=-1)

    def wavenumbers(self, a: int) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.nodes[a], d=self.h[a])


def spectral_derivative(M: int, h: float) -> np.ndarray:
    """Fourier differentiation matrix on M periodic nodes (Nyquist mode dropped)."""
    k = 2 * np.pi * np.fft.fftfreq(M, d=h)
    if M % 2 == 0:
        k[M // 2] = 0.0
    D = np.fft.ifft(1j * k[:, None] * np.fft.fft(np.eye(M), axis=0), axis=0).real
    return 0.5 * (D - D.T)


def apply_lines(mats: np.ndarray, arr: np.ndarray, axis: int) -> np.ndarray:
    """Apply one matrix per grid line along ``axis``; mats has shape (lines, p, M)."""
    moved = np.moveaxis(arr, axis, -1)
    lead = moved.shape[:-1]
    out = np.einsum("lij,lj->li", mats, moved.reshape(-1, moved.shape[-1]))
    return np.moveaxis(out.reshape(lead + (mats.shape[1],)), -1, axis)


class GridMeasureData:
    """Normalised node weights of e^{-U} on a tensor grid plus its operators."""

    def __init__(self, energy: LocalEnergy, spec: GridSpec, scheme: str = "spectral",
                 check_tails: bool = True):
        if spec.ndim != energy.n:
            raise ValueError("grid axes must match the region size")
        if scheme not in ("spectral", "fd"):
            raise ValueError(f"unknown grid scheme {scheme!r}")
        self.energy = energy
        self.spec = spec
        self.scheme = scheme
        self.x = spec.mesh()
        self.U = energy.value(self.x)
        if not np.all(np.isfinite(self.U)):
            raise ValueError("not normalizable")
        lw = -self.U
        self.log_w = lw - logsumexp(lw)
        self.w = np.exp(self.log_w)
        self.log_norm = logsumexp(lw) + np.log(spec.h).sum()  # log Z by the rectangle rule
        if check_tails:
            for a in range(spec.ndim):
                edge = np.moveaxis(self.w, a, 0)
                tail = edge[:2].sum() + edge[-2:].sum()
                if tail >= TAIL_TOL:
                    raise ValueError(f"domain too small (tail weight {tail:.3g} on axis {a})")

    @property
    def shape(self):
        return self.spec.shape

    @property
    def ndim(self):
        return self.spec.ndim

    @cached_property
    def sqrt_w(self) -> np.ndarray:
        return np.exp(0.5 * self.log_w)

    def _lines(self, field: np.ndarray, a: int) -> np.ndarray:
        moved = np.moveaxis(field, a, -1)
        return moved.reshape(-1, moved.shape[-1])

    @cached_property
    def K(self) -> list[np.ndarray]:
        """Per-axis edge operators, one matrix per grid line."""
        out = []
        for a in range(self.ndim):
            M, h = self.spec.nodes[a], self.spec.h[a]
            if self.scheme == "spectral":
                D = spectral_derivative(M, h)
                gU = self._lines(self.energy.grad(self.x)[..., a], a)
                mats = D[None] + 0.5 * gU[:, :, None] * np.eye(M)[None]
            else:
                Ul = self._lines(self.U, a)
                dU = np.diff(Ul, axis=1)
                n_lines = Ul.shape[0]
                mats = np.zeros((n_lines, M - 1, M))
                e = np.arange(M - 1)
                mats[:, e, e + 1] = np.exp(0.25 * dU) / h
                mats[:, e, e] = -np.exp(-0.25 * dU) / h
            out.append(mats)
        return out

    @cached_property
    def H(self) -> list[np.ndarray]:
        out = []
        for K in self.K:
            Hl = np.einsum("lki,lkj->lij", K, K)
            out.append(0.5 * (Hl + np.swapaxes(Hl, 1, 2)))
        return out

    def check_compatible(self, arr: np.ndarray):
        if arr.shape != self.shape:
            raise ValueError("mismatched grids")

    # -- half-density maps ---------------------------------------------------
    def to_psi(self, phi: np.ndarray) -> np.ndarray:
        self.check_compatible(phi)
        return self.sqrt_w * phi

    def log_abs2_phi(self, psi: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(psi) ** 2) - self.log_w

    def to_phi(self, psi: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.where(self.w > 0, psi / self.sqrt_w, 0.0)

    # -- operators on phi ------------------------------------------------------
    def apply_H(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        for a, H in enumerate(self.H):
            out = out + apply_lines(H, psi, a)
        return out

    def generator_apply(self, f: np.ndarray) -> np.ndarray:
        """Discrete L f = Lap f - grad U . grad f in divergence form."""
        self.check_compatible(f)
        with np.errstate(divide="ignore", invalid="ignore"):
            Lf = -self.apply_H(self.sqrt_w * f) / self.sqrt_w
        return np.where(np.isfinite(Lf), Lf, 0.0)

    def expect(self, values: np.ndarray) -> complex:
        return np.sum(self.w * values)

    def dirichlet(self, f: np.ndarray) -> float:
        """m |grad f|^2."""
        psi = self.to_psi(f)
        return float(sum(np.sum(np.abs(apply_lines(K, psi, a)) ** 2) for a, K in enumerate(self.K)))

    def grad_norms(self, psi: np.ndarray) -> np.ndarray:
        """Per-axis m|d_a phi|^2 for a wave in the half-density variable."""
        return np.array([np.sum(np.abs(apply_lines(K, psi, a)) ** 2) for a, K in enumerate(self.K)])

    def entropy_psi(self, psi: np.ndarray, floor: float = 1e-30) -> float:
        """m(|phi|^2 log(|phi|^2 / m|phi|^2)) with 0 log 0 = 0."""
        rho = np.abs(psi) ** 2
        mass = rho.sum()
        if mass <= 0:
            raise ValueError("entropy needs positive mass")
        lp = np.maximum(self.log_abs2_phi(psi), np.log(floor * mass))
        return float(np.sum(rho * (lp - np.log(mass))))

    def dense_H(self) -> np.ndarray:
        """Full matrix of H (small grids only)."""
        n = int(np.prod(self.shape))
        if n > 5000:
            raise ValueError("grid too large for a dense operator")
        E = np.eye(n).reshape(self.shape + (n,))
        cols = [self.apply_H(E[..., k]).ravel() for k in range(n)]
        Hd = np.array(cols).T
        return 0.5 * (Hd + Hd.T)
