"""Print the light-cone table for the 48-site chain: per-site gradient maxima against e^-N."""
import argparse

from lselab.dynamics import propagation_experiment
from lselab.harness.experiments import PropagationParams, default_chain, propagation_setup
from lselab.lattice import Region

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--n-max", type=int, default=20)
    a = ap.parse_args()
    fam = default_chain()
    region, f = propagation_setup(fam, PropagationParams())
    table = propagation_experiment(fam, region, f, Region([(0,)]), a.lam, a.dt, a.n_max)
    print(f"{'site':>6} {'N':>3} {'max grad^2':>12} {'bound':>12} pass")
    for r in table.rows:
        print(f"{str(r.site):>6} {r.N:3d} {r.max_grad:12.4e} {r.bound:12.4e} {r.passed}")
