"""``lab run <experiment>``, ``lab list`` and ``lab verify``.

Exit codes: 0 all checks pass, 1 some check fails, 2 bad usage or config,
3 numerical failure (solver divergence or an invalid model).
"""
from __future__ import annotations

import argparse
import sys
import zlib

import numpy as np

from ..dynamics import SolverDiverged
from .experiments import EXPERIMENTS, run_experiment
from .io import ConfigError, apply_overrides, family_from_section, output_dir, read_config, write_csv


def _print_verdict(v) -> None:
    for c in v.checks:
        mark = "PASS" if c.passed else "FAIL"
        print(f"  [{mark}] {c.label}: measured={c.measured:.6g} bound={c.bound:.6g}")
    print(f"{v.experiment}: {'PASS' if v.passed else 'FAIL'} ({v.seconds:.1f} s)")


def _run(name, cp, out, seed):
    exp = EXPERIMENTS[name]
    params = apply_overrides(exp.params(), cp, name)
    family = family_from_section(cp)
    return run_experiment(name, params, family, out, seed)


def cmd_list(args) -> int:
    for name, exp in EXPERIMENTS.items():
        print(f"{name:28s} {'; '.join(exp.claims)}")
    return 0


def cmd_run(args) -> int:
    if args.experiment not in EXPERIMENTS:
        print(f"unknown experiment {args.experiment!r}", file=sys.stderr)
        return 2
    cp = read_config(args.config)
    v = _run(args.experiment, cp, output_dir(args.out), args.seed)
    _print_verdict(v)
    return 0 if v.passed else 1


def cmd_verify(args) -> int:
    cp = read_config(args.config)
    out = output_dir(args.out)
    names = [n for n, e in EXPERIMENTS.items() if e.quick or not args.quick]
    rows, ok = [], True
    for name in names:
        v = _run(name, cp, out, args.seed ^ zlib.crc32(name.encode()))
        _print_verdict(v)
        ok &= v.passed
        rows += [(name, c.label, c.measured, c.bound, c.passed, c.claim) for c in v.checks]
    write_csv(out / "verify.csv", ["experiment", "label", "measured", "bound", "pass", "claim"], rows)
    print("ALL PASS" if ok else "SOME CHECKS FAILED")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lab", description="Numerical lab for log-nonlinear dynamics on lattice Gibbs measures.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("experiment")
    sub.add_parser("list", help="list experiments and the claims they check")
    v = sub.add_parser("verify", help="run every experiment")
    v.add_argument("--quick", action="store_true", help="skip the slow experiments")
    for s in (r, v):
        s.add_argument("--config", default=None, help="INI file with [family] and per-experiment sections")
        s.add_argument("--out", default=None, help="output directory (default $LAB_OUT or ./lab_out)")
        s.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    handlers = {"run": cmd_run, "list": cmd_list, "verify": cmd_verify}
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (SolverDiverged, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
