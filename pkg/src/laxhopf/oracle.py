"""First-order Godunov (cell transmission) reference solver.

Used as brute-force ground truth for the semi-analytic scheme. Interface
fluxes are ``min(demand(left), supply(right))``; bottlenecks cap the flux at
the interface nearest to them so that the flow overtaking the bottleneck
(relative to its speed) never exceeds its passing rate.

Boundaries follow the cumulative-count convention of the value conditions:
vehicles the road cannot accept wait in a point queue at the entrance, and
downstream capacity left unused is not lost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .conditions import InternalBlock
from .errors import ConfigError, DomainError
from .fundamental_diagram import FundamentalDiagram
from .lax_hopf import MoskowitzSolution, cell_averages
from .multi_bottleneck import TrafficSignalSpec, signal_red_intervals
from .bottleneck_propagation import MovingBottleneckSpec


@dataclass
class CellField:
    """Cell densities on ``[x_0, x_0 + n*dx]`` at ``time``."""

    dx: float
    dt: float
    k: np.ndarray
    time: float = 0.0
    x_0: float = 0.0

    @property
    def n_cells(self) -> int:
        return self.k.shape[0]

    @property
    def edges(self) -> np.ndarray:
        return self.x_0 + self.dx * np.arange(self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x_0 + self.dx * (np.arange(self.n_cells) + 0.5)

    def total(self) -> float:
        return float(self.k.sum() * self.dx)


def _check_range(fd, k):
    k = np.asarray(k, float)
    if np.any(k < -1e-12) or np.any(k > fd.k_j * (1 + 1e-12)):
        raise DomainError(f"density outside [0, {fd.k_j}]")
    return k


def demand(fd: FundamentalDiagram, k):
    """Sending flow ``min(v*k, q_max)``."""
    k = _check_range(fd, k)
    return np.minimum(fd.v * k, fd.q_max)


def supply(fd: FundamentalDiagram, k):
    """Receiving flow ``min(q_max, w*(k_j - k))``."""
    k = _check_range(fd, k)
    return np.minimum(fd.q_max, fd.w * (fd.k_j - k))


def check_cfl(fd: FundamentalDiagram, dx: float, dt: float):
    if dx <= 0 or dt <= 0:
        raise ConfigError("cell size and time step must be positive")
    limit = dx / fd.max_wave_speed
    if dt > limit * (1 + 1e-12):
        raise ConfigError(f"CFL violation: dt={dt} exceeds dx/max(v, w)={limit}")


def interface_fluxes(
    fld: CellField,
    fd: FundamentalDiagram,
    inflow_demand: float,
    outflow_supply: float,
    caps: Sequence[tuple] = (),
) -> np.ndarray:
    """Fluxes at the ``n + 1`` cell interfaces (veh/s).

    ``caps`` holds ``(position, rate)`` or ``(position, rate, speed)``; the flux
    at the interface nearest ``position`` is limited to ``rate + speed*k_upwind``.
    """
    k = fld.k
    send = np.minimum(fd.v * k, fd.q_max)
    recv = np.minimum(fd.q_max, fd.w * (fd.k_j - k))
    flux = np.empty(fld.n_cells + 1)
    flux[1:-1] = np.minimum(send[:-1], recv[1:])
    flux[0] = min(max(inflow_demand, 0.0), recv[0])
    flux[-1] = min(send[-1], max(outflow_supply, 0.0))
    for cap in caps:
        pos, rate = cap[0], cap[1]
        speed = cap[2] if len(cap) > 2 else 0.0
        i = int(round((pos - fld.x_0) / fld.dx))
        if 0 <= i <= fld.n_cells:
            k_up = k[i - 1] if i > 0 else k[0]
            flux[i] = min(flux[i], max(rate + speed * k_up, 0.0))
    return flux


def step_field(
    fld: CellField,
    fd: FundamentalDiagram,
    inflow_demand: float,
    outflow_supply: float,
    caps: Sequence[tuple] = (),
) -> CellField:
    """One conservative Godunov update."""
    check_cfl(fd, fld.dx, fld.dt)
    flux = interface_fluxes(fld, fd, inflow_demand, outflow_supply, caps)
    k = fld.k + fld.dt / fld.dx * (flux[:-1] - flux[1:])
    return CellField(fld.dx, fld.dt, k, fld.time + fld.dt, fld.x_0)


def compare_fields(a, b) -> float:
    """Relative L1 error ``sum|a - b| / sum|b|`` (``b`` is the reference)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if a.shape != b.shape:
        raise ConfigError(f"grid mismatch: {a.shape} vs {b.shape}")
    denom = np.abs(b).sum()
    if denom == 0:
        return 0.0 if np.abs(a).sum() == 0 else math.inf
    return float(np.abs(a - b).sum() / denom)


def _cumulative(pieces, t):
    return sum(q * (min(hi, t) - lo) for lo, hi, q in pieces if t > lo)


@dataclass
class OracleRun:
    times: np.ndarray
    densities: np.ndarray  # (len(times), n_cells)
    edges: np.ndarray
    inflow: float  # vehicles admitted over the run
    outflow: float  # vehicles discharged over the run
    queue: np.ndarray  # entrance queue at each snapshot
    cap_flux: list = field(default_factory=list)  # (time, interface, flux) for bottleneck caps
    bottleneck_x: Optional[np.ndarray] = None  # endogenous positions at snapshots


def _block_caps(blocks, t):
    caps = []
    for b in blocks:
        if b.t_b <= t < b.t_e:
            caps.append((b.position(t), b.rate, b.speed))
    return caps


def simulate(
    fd: FundamentalDiagram,
    x_0: float,
    x_n: float,
    T: float,
    initial: Sequence[tuple[float, float, float]],
    upstream: Sequence[tuple[float, float, float]],
    downstream: Sequence[tuple[float, float, float]],
    dx: float,
    dt: Optional[float] = None,
    sample_dt: float = 1.0,
    blocks: Sequence[InternalBlock] = (),
    moving: Sequence[MovingBottleneckSpec] = (),
    signals: Sequence[TrafficSignalSpec] = (),
    n_lanes: int = 2,
    record_caps: bool = False,
) -> OracleRun:
    """March the Godunov scheme over ``[0, T]`` and keep snapshots every ``sample_dt``.

    Bottlenecks come either from precomputed internal blocks (``blocks``: caps
    follow the given trajectories) or, end to end, from ``moving``/``signals``
    whose activity and speed are re-derived from the cell densities.
    """
    n = int(round((x_n - x_0) / dx))
    if not math.isclose(x_0 + n * dx, x_n, rel_tol=1e-9):
        raise ConfigError(f"dx={dx} does not divide the road length {x_n - x_0}")
    dt = dx / fd.max_wave_speed if dt is None else dt
    check_cfl(fd, dx, dt)
    fld = CellField(dx, dt, np.zeros(n), 0.0, x_0)
    edges = fld.edges
    k0 = np.zeros(n)
    for lo, hi, k in initial:
        # exact cell averages of the piecewise-constant initial density
        overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
        k0 += k * overlap / dx
    fld.k = k0

    n_steps = int(round(T / dt))
    every = max(1, int(round(sample_dt / dt)))
    times, snaps, queues, positions = [], [], [], []
    admitted = discharged = 0.0
    cap_log = []

    reds = [(s.x_pos, lo, hi) for s in signals for lo, hi in signal_red_intervals(s, T)]
    pos = np.array([m.x_entry for m in moving], float)
    q_r = [fd.max_passing_rate(m.v_max, n_lanes) for m in moving]
    gone = [False] * len(moving)

    for step in range(n_steps + 1):
        t = step * dt
        if step % every == 0 or step == n_steps:
            times.append(t)
            snaps.append(fld.k.copy())
            queues.append(_cumulative(upstream, t) - admitted)
            positions.append(pos.copy())
        if step == n_steps:
            break
        t_mid = t + 0.5 * dt
        in_dem = (_cumulative(upstream, t + dt) - admitted) / dt
        out_sup = (_cumulative(downstream, t + dt) - discharged) / dt
        caps = _block_caps(blocks, t_mid)
        caps += [(x, 0.0, 0.0) for x, lo, hi in reds if lo <= t_mid < hi]
        speeds = np.zeros(len(moving))
        for i, m in enumerate(moving):
            if gone[i] or t_mid < m.t_entry:
                continue
            j = min(int((pos[i] - x_0) / dx), n - 1)
            kj = fld.k[j]
            traffic = fd.v if kj <= fd.k_c else fd.flow(min(kj, fd.k_j)) / kj
            speeds[i] = min(m.v_max, traffic)
            caps.append((pos[i], q_r[i], speeds[i]))
        flux = interface_fluxes(fld, fd, in_dem, out_sup, caps)
        if record_caps:
            for c in caps:
                i = int(round((c[0] - x_0) / dx))
                if 0 <= i <= n:
                    cap_log.append((t, i, flux[i]))
        fld = CellField(dx, dt, fld.k + dt / dx * (flux[:-1] - flux[1:]), t + dt, x_0)
        admitted += flux[0] * dt
        discharged += flux[-1] * dt
        for i, m in enumerate(moving):
            if not gone[i] and t_mid >= m.t_entry:
                pos[i] += speeds[i] * dt
                if pos[i] >= m.x_exit:
                    gone[i] = True

    return OracleRun(
        times=np.array(times),
        densities=np.array(snaps),
        edges=edges,
        inflow=admitted,
        outflow=discharged,
        queue=np.array(queues),
        cap_flux=cap_log,
        bottleneck_x=np.array(positions) if len(moving) else None,
    )


def semi_analytic_cells(sol: MoskowitzSolution, edges: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Cell-averaged densities of the semi-analytic solution at the oracle's snapshots."""
    return np.array([cell_averages(sol, edges, t) for t in times])


def oracle_for(scenario, dx: float, sample_dt: float = 1.0, blocks=(), endogenous=False,
               record_caps=False) -> OracleRun:
    """Run the oracle on a :class:`~laxhopf.scenario.Scenario`."""
    kw = {}
    if endogenous:
        kw = dict(moving=scenario.moving, signals=scenario.signals, n_lanes=scenario.n_lanes)
    return simulate(
        scenario.fd, scenario.x_0, scenario.x_n, scenario.T, scenario.initial,
        scenario.upstream, scenario.downstream, dx, sample_dt=sample_dt,
        blocks=blocks, record_caps=record_caps, **kw,
    )
