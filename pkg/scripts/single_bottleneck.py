"""Single slow vehicle on a uniform road: trajectory, internal condition and density map.

    python scripts/single_bottleneck.py --out runs/single
"""

import argparse
import time
from pathlib import Path

from laxhopf.bottleneck_propagation import Regime
from laxhopf.cli import write_density, write_internal, write_trajectories
from laxhopf.lax_hopf import grid
from laxhopf.multi_bottleneck import propagate_all
from laxhopf.scenario import builtin_scenario

from _plot import density_figure


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/single_bottleneck")
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--dx", type=float, default=10.0)
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    s = builtin_scenario("single_bottleneck")
    t0 = time.perf_counter()
    res = propagate_all(s.moving, s.signals, s.base_solution(), args.dt, n_lanes=s.n_lanes)
    t_ic = time.perf_counter() - t0
    t0 = time.perf_counter()
    g = grid(res.solution, args.dx, 1.0)
    t_grid = time.perf_counter() - t0

    segs = res.trajectories[0]
    active = [x for x in segs if x.regime is Regime.ACTIVE]
    print(f"steps: {len(segs)}, active: {len(active)}, exit time: {res.exit_times[0]}")
    for b in res.solution.internal:
        print(f"block t=[{b.t_b:g}, {b.t_e:g}] x=[{b.x_b:g}, {b.x_e:g}] "
              f"N=[{b.N_b:g}, {b.N_e:g}] speed={b.speed:g} rate={b.rate:g}")
    print(f"internal conditions {t_ic:.4f}s, grid {g.k.shape} {t_grid:.3f}s")

    write_trajectories(out / "trajectories.csv", res)
    write_internal(out / "internal_conditions.csv", res)
    write_density(out / "density.csv", g)
    if density_figure(g, res.trajectories, out / "density.png", "single moving bottleneck"):
        print(f"figure: {out / 'density.png'}")


if __name__ == "__main__":
    main()
