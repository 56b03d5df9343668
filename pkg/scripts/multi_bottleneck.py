"""Ten buses and three signals on one arterial: trajectories and density map.

    python scripts/multi_bottleneck.py --out runs/multi
"""

import argparse
import time
from pathlib import Path

from laxhopf.cli import write_density, write_internal, write_trajectories
from laxhopf.lax_hopf import grid
from laxhopf.multi_bottleneck import propagate_all
from laxhopf.optimizer import bottleneck_delays
from laxhopf.scenario import builtin_scenario

from _plot import density_figure


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/multi_bottleneck")
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--dx", type=float, default=10.0)
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    s = builtin_scenario("multi_bottleneck")
    t0 = time.perf_counter()
    res = propagate_all(s.moving, s.signals, s.base_solution(), args.dt, n_lanes=s.n_lanes)
    t_ic = time.perf_counter() - t0
    t0 = time.perf_counter()
    g = grid(res.solution, args.dx, 1.0)
    t_grid = time.perf_counter() - t0

    delays = bottleneck_delays(s, res)
    print(f"{'bus':>4} {'entry':>7} {'v_max':>6} {'exit':>8} {'delay':>7}")
    for i, (spec, t_exit, d) in enumerate(zip(s.moving, res.exit_times, delays)):
        shown = f"{t_exit:8.1f}" if t_exit is not None else "  en route"
        print(f"{i:>4} {spec.t_entry:7.1f} {spec.v_max:6.1f} {shown} {d:7.1f}")
    print(f"blocks: {len(res.solution.internal)}, rounds: {res.rounds} "
          f"(forced {res.forced_rounds}), steps: {res.step_count}")
    print(f"internal conditions {t_ic:.3f}s, grid {g.k.shape} {t_grid:.3f}s")

    write_trajectories(out / "trajectories.csv", res)
    write_internal(out / "internal_conditions.csv", res)
    write_density(out / "density.csv", g)
    if density_figure(g, res.trajectories, out / "density.png", "buses and signals"):
        print(f"figure: {out / 'density.png'}")


if __name__ == "__main__":
    main()
