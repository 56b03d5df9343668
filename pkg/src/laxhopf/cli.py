"""Command-line front end: ``laxhopf simulate | validate | optimize``.

Exit codes: 0 success, 2 malformed scenario or config file, 3 numeric or
configuration error (CFL violation, infeasible conditions, ...).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import optimizer
from .errors import ConfigError, DomainError, SchemaError
from .lax_hopf import grid
from .multi_bottleneck import PropagationResult, propagate_all
from .oracle import compare_fields, oracle_for, semi_analytic_cells
from .scenario import Scenario, builtin_path, load_scenario

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERIC = 0, 2, 3


@dataclass
class RunReport:
    command: str
    timings: dict[str, float] = field(default_factory=dict)  # seconds per phase
    outputs: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _resolve(path: str) -> Path:
    """A file path, or ``builtin:<name>`` for a packaged scenario."""
    if path.startswith("builtin:"):
        return builtin_path(path.split(":", 1)[1])
    return Path(path)


def _write_csv(path: Path, header: Sequence[str], rows) -> str:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return str(path)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectories(path: Path, result: PropagationResult) -> str:
    rows = []
    for i, segs in enumerate(result.trajectories):
        for s in segs:
            rows.append((i, _fmt(s.t0), _fmt(s.x0), s.regime.value))
        if segs:
            last = segs[-1]
            rows.append((i, _fmt(last.t1), _fmt(last.x1), last.regime.value))
    return _write_csv(path, ("bottleneck_id", "t", "x", "regime"), rows)


def write_internal(path: Path, result: PropagationResult) -> str:
    rows = [
        (b.tag or "", *(_fmt(v) for v in (b.t_b, b.x_b, b.t_e, b.x_e, b.N_b, b.N_e)))
        for b in result.solution.internal
    ]
    return _write_csv(path, ("source", "t_b", "x_b", "t_e", "x_e", "N_b", "N_e"), rows)


def write_density(path: Path, g) -> str:
    header = ["t\\x", *(_fmt(x) for x in g.xs)]
    rows = ([_fmt(t), *(_fmt(k) for k in row)] for t, row in zip(g.ts, g.k))
    return _write_csv(path, header, rows)


def summarize(scenario: Scenario, result: PropagationResult) -> dict:
    return {
        "outflow_N_xn_T": optimizer.outflow_of(scenario, result),
        "total_delay_s": optimizer.delay_of(scenario, result),
        "delay_per_bottleneck_s": optimizer.bottleneck_delays(scenario, result),
        "exit_times_s": result.exit_times,
        "internal_blocks": len(result.solution.internal),
        "steps": result.step_count,
    }


def run_simulation(scenario: Scenario, out: Optional[Path], dt: Optional[float] = None,
                   dx: Optional[float] = 10.0, dt_out: float = 1.0,
                   report: Optional[RunReport] = None) -> RunReport:
    report = report or RunReport("simulate")
    step = scenario.dt if dt is None else dt
    t0 = time.perf_counter()
    base = scenario.base_solution()
    result = propagate_all(scenario.moving, scenario.signals, base, step, n_lanes=scenario.n_lanes)
    report.timings["internal_conditions"] = time.perf_counter() - t0
    g = None
    if dx:
        t0 = time.perf_counter()
        g = grid(result.solution, dx, dt_out)
        report.timings["grid"] = time.perf_counter() - t0
    report.summary.update(summarize(scenario, result))
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        report.outputs["trajectories"] = write_trajectories(out / "trajectories.csv", result)
        report.outputs["internal_conditions"] = write_internal(out / "internal_conditions.csv", result)
        if g is not None:
            report.outputs["density"] = write_density(out / "density.csv", g)
    return report


def cmd_simulate(args) -> RunReport:
    scenario = load_scenario(_resolve(args.scenario))
    return run_simulation(scenario, Path(args.out) if args.out else None, args.dt,
                          None if args.no_grid else args.dx, args.dt_out)


def cmd_validate(args) -> RunReport:
    scenario = load_scenario(_resolve(args.scenario))
    report = RunReport("validate")
    t0 = time.perf_counter()
    base = scenario.base_solution()
    result = propagate_all(scenario.moving, scenario.signals, base, scenario.dt,
                           n_lanes=scenario.n_lanes)
    report.timings["internal_conditions"] = time.perf_counter() - t0
    levels = [args.dx / 2**i for i in range(args.levels)]
    errors = []
    t0 = time.perf_counter()
    for dx in levels:
        run = oracle_for(scenario, dx, sample_dt=args.dt_out, blocks=result.solution.internal)
        exact = semi_analytic_cells(result.solution, run.edges, run.times)
        errors.append(compare_fields(run.densities, exact))
        print(f"dx={dx:g} m  relative L1 = {errors[-1]:.6f}")
    ratios = [a / b if b > 0 else float("inf") for a, b in zip(errors, errors[1:])]
    for dx, r in zip(levels[1:], ratios):
        print(f"  ratio at dx={dx:g} m: {r:.3f}")
    report.timings["oracle"] = time.perf_counter() - t0
    report.summary.update({"dx": levels, "l1_error": errors, "ratios": ratios})
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rows = [(_fmt(dx), _fmt(e)) for dx, e in zip(levels, errors)]
        report.outputs["convergence"] = _write_csv(out / "convergence.csv", ("dx", "l1_error"), rows)
    return report


def load_ga_config(path: Optional[str], overrides: dict) -> optimizer.GAConfig:
    doc = {}
    if path:
        text = Path(path).read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", f"line {exc.lineno}") from exc
        if not isinstance(doc, dict):
            raise SchemaError("expected an object", "<root>")
        known = set(optimizer.GAConfig.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise SchemaError(f"unknown GA settings {sorted(unknown)}", "<root>")
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return optimizer.GAConfig(**doc)


def cmd_optimize(args) -> RunReport:
    scenario = load_scenario(_resolve(args.scenario))
    cfg = load_ga_config(args.ga_config, {
        "seed": args.seed, "population": args.population, "generations": args.generations,
    })
    report = RunReport("optimize")
    ga = optimizer.run_ga(cfg, scenario, args.objective)
    report.timings["optimization"] = ga.wall_time
    best = optimizer.decode(ga.best_chromosome, scenario)
    report.summary.update({
        "objective": args.objective,
        "baseline": ga.baseline,
        "best": ga.best_fitness,
        "improvement": ga.improvement,
        "genes": list(ga.best_chromosome.genes),
        "evaluations": ga.evaluations,
    })
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        rows = [(g, _fmt(b), _fmt(m)) for g, (b, m) in enumerate(zip(ga.best, ga.mean))]
        report.outputs["ga_history"] = _write_csv(out / "ga_history.csv",
                                                  ("generation", "best", "mean"), rows)
        best.name = (scenario.name + " (optimized)").strip()
        best.dump(out / "best_scenario.json")
        report.outputs["best_scenario"] = str(out / "best_scenario.json")
    sim = run_simulation(best, out, dx=None if args.no_grid else args.dx, dt_out=args.dt_out)
    report.timings.update(sim.timings)
    report.outputs.update(sim.outputs)
    report.summary["best_scenario_summary"] = sim.summary
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="laxhopf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", help="scenario JSON file, or builtin:<name>")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--dx", type=float, default=10.0, help="grid / cell size (m)")
        sp.add_argument("--dt-out", type=float, default=1.0, help="output time step (s)")

    s = sub.add_parser("simulate", help="trajectories, internal conditions and density grid")
    common(s)
    s.add_argument("--dt", type=float, default=None, help="propagation step (s)")
    s.add_argument("--no-grid", action="store_true", help="skip the density grid")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate", help="compare against the Godunov oracle under refinement")
    common(v)
    v.add_argument("--levels", type=int, default=3, help="number of halvings of --dx")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("optimize", help="genetic algorithm over entry times and signal timings")
    common(o)
    o.add_argument("--objective", choices=("outflow", "delay"), default="outflow")
    o.add_argument("--seed", type=int, default=None)
    o.add_argument("--population", type=int, default=None)
    o.add_argument("--generations", type=int, default=None)
    o.add_argument("--ga-config", help="JSON file with GAConfig fields")
    o.add_argument("--no-grid", action="store_true")
    o.set_defaults(func=cmd_optimize)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (DomainError, ConfigError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(report.to_json())
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
