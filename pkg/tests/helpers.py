"""Shared builders for the test suite: random scenarios and solution-property checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from laxhopf.bottleneck_propagation import MovingBottleneckSpec
from laxhopf.fundamental_diagram import FundamentalDiagram
from laxhopf.multi_bottleneck import TrafficSignalSpec
from laxhopf.scenario import Scenario

FD = FundamentalDiagram.from_densities(30.0, 0.04, 0.2)


def _pieces(rng, lo, hi, n, sampler):
    cuts = np.sort(rng.uniform(lo, hi, n - 1)) if n > 1 else np.array([])
    edges = [lo, *np.round(cuts, 1), hi]
    return [(float(a), float(b), float(sampler())) for a, b in zip(edges, edges[1:]) if b > a]


def random_scenario(rng: np.random.Generator, length=2000.0, horizon=200.0,
                    max_moving=5, max_signals=2) -> Scenario:
    """Piecewise-constant conditions, 0..max_moving bottlenecks, 0..max_signals signals."""
    v = float(rng.uniform(20, 35))
    k_c = float(rng.uniform(0.02, 0.05))
    k_j = float(k_c * rng.uniform(3, 6))
    fd = FundamentalDiagram.from_densities(v, k_c, k_j)
    initial = _pieces(rng, 0.0, length, int(rng.integers(1, 5)), lambda: rng.uniform(0, k_j))
    upstream = _pieces(rng, 0.0, horizon, int(rng.integers(1, 4)), lambda: rng.uniform(0, fd.q_max))
    downstream = _pieces(rng, 0.0, horizon, int(rng.integers(1, 4)), lambda: rng.uniform(0, fd.q_max))
    moving = []
    for _ in range(int(rng.integers(0, max_moving + 1))):
        x_entry = float(rng.uniform(0, 0.7 * length))
        moving.append(MovingBottleneckSpec(
            x_entry=x_entry,
            t_entry=float(rng.uniform(0, 0.7 * horizon)),
            x_exit=float(rng.uniform(x_entry + 100, length)),
            v_max=float(rng.uniform(0.1, 0.6) * v),
        ))
    signals = []
    for _ in range(int(rng.integers(0, max_signals + 1))):
        cycle = float(rng.uniform(40, 120))
        signals.append(TrafficSignalSpec(
            x_pos=float(rng.uniform(0.1, 0.9) * length),
            cycle=cycle,
            green=float(rng.uniform(0.3, 0.8) * cycle),
            offset=float(rng.uniform(0, cycle)),
        ))
    return Scenario(fd=fd, n_lanes=int(rng.integers(1, 4)), x_0=0.0, x_n=length, T=horizon,
                    initial=initial, upstream=upstream, downstream=downstream,
                    moving=moving, signals=signals)


@dataclass
class PropertyReport:
    time_slope_min: float
    time_slope_max: float
    space_slope_min: float
    space_slope_max: float

    def ok(self, fd: FundamentalDiagram, eps: float = 1e-6) -> bool:
        return (
            self.time_slope_min >= -eps
            and self.time_slope_max <= fd.q_max + eps
            and self.space_slope_min >= -fd.k_j - eps
            and self.space_slope_max <= eps
        )


def slope_report(sol, nx=61, nt=61) -> PropertyReport:
    """Discrete slopes of N on a regular grid covering the whole domain."""
    xs = np.linspace(sol.x_0, sol.x_n, nx)
    ts = np.linspace(0.0, sol.T, nt)
    X, Tm = np.meshgrid(xs, ts)
    N = sol.values(X, Tm)
    dn_dt = np.diff(N, axis=0) / np.diff(ts)[:, None]
    dn_dx = np.diff(N, axis=1) / np.diff(xs)[None, :]
    return PropertyReport(dn_dt.min(), dn_dt.max(), dn_dx.min(), dn_dx.max())


def road(k, q_in, q_out, T=300.0, L=3000.0, fd=FD):
    """Uniform initial density ``k`` with constant boundary flows."""
    from laxhopf.conditions import build_downstream, build_initial, build_upstream, initial_count
    from laxhopf.lax_hopf import MoskowitzSolution

    ini = build_initial([(0, L, k)], 0.0, fd)
    return MoskowitzSolution(fd, 0.0, L, T, ini, build_upstream([(0, T, q_in)], fd),
                             build_downstream([(0, T, q_out)], initial_count(ini, L), fd))
