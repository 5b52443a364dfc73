"""Metropolis-adjusted Langevin sampling of e^{-U} and batch-means error bars."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .potential import LocalEnergy


@dataclass(frozen=True)
class McmcConfig:
    step: float = 0.5
    samples: int = 4000
    burn_in: int = 1000
    chains: int = 4
    seed: int = 0
    target_accept: float = 0.57

    def __post_init__(self):
        if self.samples < 1 or self.chains < 1:
            raise ValueError("samples and chains must be >= 1")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.burn_in < 0:
            raise ValueError("burn-in must be >= 0")


@dataclass
class McmcRun:
    draws: np.ndarray          # (chains, samples, n)
    acceptance: np.ndarray     # per chain, after burn-in
    steps: np.ndarray          # frozen step size per chain


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    ess: float


def _mala_chain(energy: LocalEnergy, x0, step, n_burn, n_keep, target, rng):
    n = energy.n
    x = np.array(x0, dtype=float)
    u, g = energy.value(x), energy.grad(x)
    out = np.empty((n_keep, n))
    acc = 0
    log_steps = []
    for t in range(n_burn + n_keep):
        if t == n_burn and log_steps:
            step = float(np.exp(np.mean(log_steps)))   # freeze at the averaged late-burn-in step
        noise = rng.standard_normal(n)
        y = x - step * g + np.sqrt(2 * step) * noise
        uy, gy = energy.value(y), energy.grad(y)
        # log q(x | y) - log q(y | x)
        fwd = y - x + step * g
        bwd = x - y + step * gy
        log_a = (u - uy) - (bwd @ bwd - fwd @ fwd) / (4 * step)
        ok = np.log(rng.uniform()) < log_a
        if ok:
            x, u, g = y, uy, gy
        if t < n_burn:
            # Robbins-Monro tuning toward the target rate, frozen after burn-in
            step *= np.exp((float(ok) - target) / np.sqrt(t + 1.0))
            if t >= n_burn // 2:
                log_steps.append(np.log(step))
        else:
            acc += ok
            out[t - n_burn] = x
    return out, acc / max(n_keep, 1), step


def run_mala(energy: LocalEnergy, cfg: McmcConfig, x0=None) -> McmcRun:
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)
    x0 = np.zeros(energy.n) if x0 is None else np.asarray(x0, dtype=float)
    draws, acc, steps = [], [], []
    for ss in seeds:
        d, a, s = _mala_chain(energy, x0, cfg.step, cfg.burn_in, cfg.samples,
                              cfg.target_accept, np.random.default_rng(ss))
        draws.append(d)
        acc.append(a)
        steps.append(s)
    return McmcRun(np.array(draws), np.array(acc), np.array(steps))


def batch_means(values: np.ndarray, n_batches: int = 20) -> Estimate:
    """Mean, batch-means standard error and effective sample size of (chains, draws) values."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n_chain, n_draw = values.shape
    k = max(1, min(n_batches, n_draw))
    size = n_draw // k
    batches = values[:, : k * size].reshape(n_chain, k, size).mean(axis=2).ravel()
    mean = float(values.mean())
    if batches.size < 2:
        return Estimate(mean, float("nan"), float("nan"))
    se = float(batches.std(ddof=1) / np.sqrt(batches.size))
    var = float(values.var(ddof=1))
    ess = var / se ** 2 if se > 0 else float(values.size)
    return Estimate(mean, se, ess)


def write_draws_csv(run: McmcRun, sites, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "draw", "site", "value"])
        for c in range(run.draws.shape[0]):
            for t in range(run.draws.shape[1]):
                for k, s in enumerate(sites):
                    w.writerow([c, t, ",".join(map(str, s)), format(run.draws[c, t, k], ".17g")])


def write_summary_csv(rows: dict[str, Estimate], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["observable", "estimate", "stderr", "ess"])
        for name, e in rows.items():
            w.writerow([name, format(e.value, ".17g"), format(e.stderr, ".17g"), format(e.ess, ".17g")])
