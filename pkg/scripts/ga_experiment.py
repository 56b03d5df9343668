"""Genetic algorithm over bus entry times and signal timings, several seeds and population sizes.

    python scripts/ga_experiment.py --objective delay --seeds 0 1 2 --populations 30 100
"""

import argparse
import csv
from pathlib import Path

from laxhopf.optimizer import GAConfig, run_ga
from laxhopf.scenario import builtin_scenario


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--objective", choices=("outflow", "delay"), default="outflow")
    p.add_argument("--seeds", type=int, nargs="+", default=list(range(5)))
    p.add_argument("--populations", type=int, nargs="+", default=[30])
    p.add_argument("--generations", type=int, default=20)
    p.add_argument("--out", default="runs/ga")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    s = builtin_scenario("signal_optimization")

    summary = []
    for pop in args.populations:
        for seed in args.seeds:
            cfg = GAConfig(population=pop, generations=args.generations, seed=seed,
                           tournament=max(1, pop // 10))
            rep = run_ga(cfg, s, args.objective)
            summary.append((pop, seed, rep.baseline, rep.best_fitness, rep.improvement,
                            rep.wall_time, rep.evaluations))
            print(f"pop {pop:4d} seed {seed:3d}: {rep.baseline:9.2f} -> {rep.best_fitness:9.2f} "
                  f"({100 * rep.improvement:+.1f}%), {rep.wall_time:6.1f}s, "
                  f"{rep.evaluations} simulations")
            with (out / f"history_{args.objective}_p{pop}_s{seed}.csv").open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(("generation", "best", "mean"))
                w.writerows((g, b, m) for g, (b, m) in enumerate(zip(rep.best, rep.mean)))

    with (out / f"summary_{args.objective}.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("population", "seed", "baseline", "best", "improvement", "wall_time_s",
                    "simulations"))
        w.writerows(summary)


if __name__ == "__main__":
    main()
