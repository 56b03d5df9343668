"""Relative L1 distance between the semi-analytic grid and the Godunov oracle under refinement.

    python scripts/convergence_study.py --scenario no_bottleneck --levels 5
"""

import argparse

from laxhopf.multi_bottleneck import propagate_all
from laxhopf.oracle import compare_fields, oracle_for, semi_analytic_cells
from laxhopf.scenario import builtin_scenario


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", default="no_bottleneck")
    p.add_argument("--dx", type=float, default=20.0)
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--sample-dt", type=float, default=5.0)
    args = p.parse_args()

    s = builtin_scenario(args.scenario)
    res = propagate_all(s.moving, s.signals, s.base_solution(), s.dt, n_lanes=s.n_lanes)
    prev = None
    print(f"{'dx':>8} {'L1':>10} {'ratio':>7}")
    for i in range(args.levels):
        dx = args.dx / 2**i
        run = oracle_for(s, dx, sample_dt=args.sample_dt, blocks=res.solution.internal)
        err = compare_fields(run.densities, semi_analytic_cells(res.solution, run.edges, run.times))
        ratio = f"{prev / err:7.3f}" if prev else ""
        print(f"{dx:8.3f} {err:10.6f} {ratio}")
        prev = err


if __name__ == "__main__":
    main()
