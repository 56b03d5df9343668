"""Fixed-step propagation of a single moving bottleneck.

Each step probes the Moskowitz function at the bottleneck and at the point it
would reach at full speed; the relative flow between the two probes decides
whether the slow vehicle restricts traffic. Active phases are stored as
internal condition blocks on the solution, so later probes see them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .conditions import InternalBlock
from .errors import DomainError
from .lax_hopf import MoskowitzSolution

_TOL = 1e-9


class Regime(enum.Enum):
    INACTIVE_LOW_FLOW = "inactive_low_flow"
    ACTIVE = "active"
    INACTIVE_CONGESTED = "inactive_congested"


@dataclass(frozen=True)
class MovingBottleneckSpec:
    """Slow vehicle entering at ``(x_entry, t_entry)`` and leaving at ``x_exit``."""

    x_entry: float
    t_entry: float
    x_exit: float
    v_max: float

    def __post_init__(self):
        if not self.x_entry < self.x_exit:
            raise DomainError(f"bottleneck must exit downstream of its entry ({self.x_entry} -> {self.x_exit})")
        if self.v_max <= 0:
            raise DomainError(f"bottleneck speed must be positive, got {self.v_max}")
        if self.t_entry < 0:
            raise DomainError(f"negative entry time {self.t_entry}")

    def check_road(self, sol: MoskowitzSolution):
        if self.x_entry < sol.x_0 or self.x_exit > sol.x_n:
            raise DomainError(f"bottleneck path [{self.x_entry}, {self.x_exit}] leaves the road")
        if self.v_max > sol.fd.v:
            raise DomainError(f"bottleneck speed {self.v_max} exceeds free-flow speed {sol.fd.v}")


@dataclass(frozen=True)
class TrajectorySegment:
    t0: float
    t1: float
    x0: float
    x1: float
    regime: Regime
    passing_count: float

    @property
    def speed(self) -> float:
        return (self.x1 - self.x0) / (self.t1 - self.t0)


def classify(M0: float, M1: float, dt: float, q_r: float) -> Regime:
    """Activity regime from the relative flow ``(M1 - M0)/dt``.

    Ties resolve deterministically: zero flow is low-flow, ``q_r`` is active.
    """
    if dt <= 0:
        raise DomainError("probe interval must be positive")
    flow_rel = (M1 - M0) / dt
    if flow_rel < 0:
        return Regime.INACTIVE_CONGESTED
    if flow_rel < q_r:
        return Regime.INACTIVE_LOW_FLOW
    return Regime.ACTIVE


def local_density(sol: MoskowitzSolution, x: float, t: float, probe: float) -> float:
    """Density around ``(x, t)`` for the congested-speed law, clamped to ``[k_c, k_j]``."""
    lo = max(sol.x_0, x - 0.5 * probe)
    hi = min(sol.x_n, x + 0.5 * probe)
    if hi - lo <= 0:
        return sol.fd.k_j
    k = -(sol.value(hi, t) - sol.value(lo, t)) / (hi - lo)
    if not math.isfinite(k):
        return sol.fd.k_c
    return min(max(k, sol.fd.k_c), sol.fd.k_j)


def step(
    state: tuple[float, float],
    spec: MovingBottleneckSpec,
    sol: MoskowitzSolution,
    dt: float,
    q_r: float,
) -> tuple[tuple[float, float], Regime, TrajectorySegment, Optional[InternalBlock]]:
    """Advance one bottleneck by one step of at most ``dt``.

    The step is shortened so the bottleneck never overshoots ``x_exit`` or the
    horizon. Returns the new state, the regime, the travelled segment and the
    internal-condition fragment emitted when active.
    """
    x0, t0 = state
    if not sol.contains(x0, t0):
        raise DomainError(f"bottleneck state ({x0}, {t0}) outside the domain")
    h = min(dt, sol.T - t0, (spec.x_exit - x0) / spec.v_max)
    if h <= 0:
        raise DomainError("bottleneck has already left the domain")
    M0 = sol.value(x0, t0)
    M1 = sol.value(x0 + spec.v_max * h, t0 + h)
    regime = classify(M0, M1, h, q_r)

    if regime is Regime.INACTIVE_CONGESTED:
        k0 = local_density(sol, x0, t0, 2.0 * spec.v_max * dt)
        speed = min(sol.fd.congested_speed(k0), spec.v_max)
        x1, t1 = x0 + speed * h, t0 + h
        passing = max(0.0, sol.value(x1, t1) - M0)
        return (x1, t1), regime, TrajectorySegment(t0, t1, x0, x1, regime, passing), None

    x1, t1 = x0 + spec.v_max * h, t0 + h
    if x1 > spec.x_exit:
        x1 = spec.x_exit
    if regime is Regime.ACTIVE:
        fragment = InternalBlock(t0, t1, x0, x1, M0, M0 + q_r * h)
        segment = TrajectorySegment(t0, t1, x0, x1, regime, q_r * h)
        return (x1, t1), regime, segment, fragment
    segment = TrajectorySegment(t0, t1, x0, x1, regime, M1 - M0)
    return (x1, t1), regime, segment, None


class BottleneckRun:
    """Stateful propagation of one bottleneck; merges consecutive active steps.

    The growing active block is kept on the solution and extended in place, so
    only the onset and end of each activity phase are stored.
    """

    def __init__(self, spec: MovingBottleneckSpec, sol: MoskowitzSolution, dt: float,
                 n_lanes: int, tag: Optional[str] = None):
        spec.check_road(sol)
        if dt <= 0:
            raise DomainError("time step must be positive")
        self.spec = spec
        self.sol = sol
        self.dt = dt
        self.tag = tag
        self.q_r = sol.fd.max_passing_rate(spec.v_max, n_lanes)
        self.x = spec.x_entry
        self.t = spec.t_entry
        self.segments: list[TrajectorySegment] = []
        self.blocks: list[int] = []  # indices into sol.internal
        self.exit_time: Optional[float] = None
        self.steps = 0
        self._open: Optional[int] = None

    @property
    def done(self) -> bool:
        return self.t >= self.sol.T - _TOL or self.x >= self.spec.x_exit - _TOL

    def next_probe(self) -> tuple[float, float]:
        h = min(self.dt, self.sol.T - self.t)
        return min(self.x + self.spec.v_max * h, self.spec.x_exit), self.t + h

    def advance(self) -> Regime:
        (x1, t1), regime, segment, fragment = step(
            (self.x, self.t), self.spec, self.sol, self.dt, self.q_r
        )
        self.steps += 1
        self.segments.append(segment)
        if fragment is None:
            self._open = None
        else:
            self._store(fragment)
        self.x, self.t = x1, t1
        if self.x >= self.spec.x_exit - _TOL:
            self.x = self.spec.x_exit
            self.exit_time = self.t
        return regime

    def _store(self, fragment: InternalBlock):
        if self._open is not None:
            last = self.sol.internal[self._open]
            if (
                abs(last.t_e - fragment.t_b) <= _TOL
                and abs(last.x_e - fragment.x_b) <= 1e-7
                and abs(last.N_e - fragment.N_b) <= _TOL
            ):
                merged = InternalBlock(
                    last.t_b, fragment.t_e, last.x_b, fragment.x_e, last.N_b,
                    last.N_b + self.q_r * (fragment.t_e - last.t_b), self.tag,
                )
                self.sol.replace_internal(self._open, merged)
                return
        block = InternalBlock(fragment.t_b, fragment.t_e, fragment.x_b, fragment.x_e,
                              fragment.N_b, fragment.N_e, self.tag)
        self._open = self.sol.add_internal(block)
        self.blocks.append(self._open)

    def run(self):
        while not self.done:
            self.advance()
        return self

    @property
    def internal_blocks(self) -> list[InternalBlock]:
        return [self.sol.internal[i] for i in self.blocks]


def propagate(
    spec: MovingBottleneckSpec,
    sol: MoskowitzSolution,
    dt: float = 1.0,
    T: Optional[float] = None,
    n_lanes: int = 2,
    tag: Optional[str] = None,
) -> tuple[list[TrajectorySegment], list[InternalBlock]]:
    """Propagate one bottleneck to its exit or the horizon.

    Internal blocks are appended to ``sol`` as they are found; ``T`` defaults to
    (and may not exceed) the solution horizon.
    """
    if T is not None and T > sol.T + _TOL:
        raise DomainError(f"horizon {T} exceeds the solution horizon {sol.T}")
    run = BottleneckRun(spec, sol, dt, n_lanes, tag)
    horizon = sol.T if T is None else T
    while not run.done and run.t < horizon - _TOL:
        run.advance()
    return run.segments, run.internal_blocks
