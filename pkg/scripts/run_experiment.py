"""Run a single named experiment; ``--list`` shows the available names."""
import argparse
import sys

from lselab.harness.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("experiment", nargs="?")
    ap.add_argument("--list", action="store_true")
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default="lab_out")
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    if a.list or not a.experiment:
        sys.exit(main(["list"]))
    argv = ["run", a.experiment, "--out", a.out, "--seed", str(a.seed)]
    if a.config:
        argv += ["--config", a.config]
    sys.exit(main(argv))
