"""Run every experiment (or only the quick ones) and print a summary."""
import argparse
import sys

from lselab.harness.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--out", default="lab_out")
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    argv = ["verify", "--out", a.out, "--seed", str(a.seed)] + (["--quick"] if a.quick else [])
    sys.exit(main(argv))
