"""Scheduling of many moving bottlenecks and signal red phases.

A pending element (moving bottleneck or red interval) can only affect points
inside the forward cone of its current space-time position, bounded by slopes
``v`` ahead and ``-w`` behind. An element whose next probe lies outside every
other pending cone is advanced immediately; when every element is blocked by
another (bottlenecks about to cross), the earliest one and everything it
mutually blocks are advanced one fixed step using the conditions stored so
far. Red phases are fixed bottlenecks with zero passing rate, anchored to the
count observed when the clock reaches the start of red.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bottleneck_propagation import BottleneckRun, MovingBottleneckSpec, TrajectorySegment
from .conditions import InternalBlock
from .errors import DomainError
from .fundamental_diagram import FundamentalDiagram
from .lax_hopf import MoskowitzSolution

_TOL = 1e-9


@dataclass(frozen=True)
class TrafficSignalSpec:
    """Fixed-time signal; each cycle starts with green, then red until the cycle ends."""

    x_pos: float
    cycle: float
    green: float
    offset: float = 0.0

    def __post_init__(self):
        if not 0 < self.green < self.cycle:
            raise DomainError(f"need 0 < green < cycle, got green={self.green}, cycle={self.cycle}")


def signal_red_intervals(sig: TrafficSignalSpec, T: float) -> list[tuple[float, float]]:
    """Red intervals ``[offset + k*c + g, offset + (k+1)*c]`` clipped to ``[0, T]``.

    ``offset`` is the start of the first cycle (``k = 0``); the road is
    unrestricted before it. Intervals starting at or after ``T`` are dropped.
    """
    if T <= 0:
        raise DomainError("horizon must be positive")
    out = []
    k = 0
    while True:
        start = sig.offset + k * sig.cycle + sig.green
        end = sig.offset + (k + 1) * sig.cycle
        k += 1
        if start >= T:
            break
        lo, hi = max(start, 0.0), min(end, T)
        if hi > lo:
            out.append((lo, hi))
    return out


@dataclass(frozen=True)
class InfluenceDomain:
    """Forward cone of a set of source points, bounded by speeds ``v`` and ``-w``."""

    sources: tuple[tuple[float, float], ...]  # (x, t)
    v: float
    w: float

    @classmethod
    def of_segments(cls, segments: Sequence[TrajectorySegment], fd: FundamentalDiagram):
        pts = [(s.x0, s.t0) for s in segments]
        if segments:
            pts.append((segments[-1].x1, segments[-1].t1))
        return cls(tuple(pts), fd.v, fd.w)

    def __contains__(self, point) -> bool:
        return in_influence(point, self.sources, self.v, self.w)


def in_influence(point, source, v: float, w: float) -> bool:
    """True when ``point = (x, t)`` is reachable from some ``(x_s, t_s)`` in ``source``.

    ``source`` is one ``(x, t)`` pair or a sequence of them (trajectory samples).
    """
    src = np.atleast_2d(np.asarray(source, float))
    x, t = float(point[0]), float(point[1])
    lag = t - src[:, 1]
    gap = x - src[:, 0]
    ok = (lag >= -_TOL) & (gap <= v * lag + _TOL) & (gap >= -w * lag - _TOL)
    return bool(ok.any())


class _RedPhase:
    """One red interval of one signal, waiting to be anchored."""

    def __init__(self, x_pos, t_start, t_end, tag):
        self.x = x_pos
        self.t = t_start
        self.t_end = t_end
        self.tag = tag
        self.done = False
        self.block: Optional[int] = None
        self.steps = 0

    def next_probe(self):
        return self.x, self.t

    def sort_key(self):
        return (self.t, self.x, 1, self.t_end)

    def advance(self, sol: MoskowitzSolution):
        count = sol.value(self.x, self.t)
        self.block = sol.add_internal(
            InternalBlock(self.t, self.t_end, self.x, self.x, count, count, self.tag)
        )
        self.done = True
        self.steps += 1


@dataclass
class PropagationResult:
    solution: MoskowitzSolution
    trajectories: list[list[TrajectorySegment]]
    exit_times: list[Optional[float]]
    final_states: list[tuple[float, float]]  # (x, t) where each bottleneck stopped
    bottleneck_blocks: list[list[InternalBlock]]
    signal_blocks: list[list[InternalBlock]]
    step_count: int = 0
    rounds: int = 0
    forced_rounds: int = 0  # rounds resolved by simultaneous stepping

    @property
    def internal_blocks(self) -> list[InternalBlock]:
        return list(self.solution.internal)


def _sort_key(e) -> tuple:
    if isinstance(e, BottleneckRun):
        sp = e.spec
        return (e.t, e.x, 0, sp.t_entry, sp.x_entry, sp.x_exit, sp.v_max)
    return e.sort_key()


@dataclass
class _Scheduler:
    sol: MoskowitzSolution
    elements: list = field(default_factory=list)

    def _probes(self, active):
        """Per-element probe points that must be free of others' influence."""
        pts = []
        for e in active:
            if isinstance(e, BottleneckRun):
                xp, tp = e.next_probe()
                pts.append(((xp, tp), (max(e.x - e.spec.v_max * e.dt, self.sol.x_0), e.t)))
            else:
                pts.append(((e.x, e.t),))
        return pts

    def _blockers(self, active) -> list[set]:
        """``out[i]``: indices of elements whose forward cone holds one of ``i``'s probes."""
        v, w = self.sol.fd.v, self.sol.fd.w
        src = [(e.x, e.t) for e in active]
        out = []
        for i, probes in enumerate(self._probes(active)):
            hit = set()
            for px, pt in probes:
                for j, (sx, st) in enumerate(src):
                    lag = pt - st
                    gap = px - sx
                    if j != i and lag >= -_TOL and -w * lag - _TOL <= gap <= v * lag + _TOL:
                        hit.add(j)
            out.append(hit)
        return out

    def blocked_matrix(self, active) -> np.ndarray:
        """``B[i, j]``: element ``i``'s next probe lies in ``j``'s forward cone."""
        blocked = np.zeros((len(active), len(active)), dtype=bool)
        for i, hit in enumerate(self._blockers(active)):
            blocked[i, list(hit)] = True
        return blocked

    def _advance(self, e):
        if isinstance(e, BottleneckRun):
            e.advance()
        else:
            e.advance(self.sol)

    def run(self) -> tuple[int, int]:
        rounds = forced = 0
        while True:
            active = [e for e in self.elements if not e.done]
            if not active:
                return rounds, forced
            rounds += 1
            # ascending current time; ties broken by content, not input position,
            # so permuting the input lists cannot change the schedule
            order = sorted(range(len(active)), key=lambda i: (*_sort_key(active[i]), i))
            blocked = self._blockers(active)
            free = [i for i in order if not blocked[i]]
            if free:
                for i in free:
                    self._run_free(active, i)
                continue
            forced += 1
            first = order[0]
            group = [i for i in order if i == first or (i in blocked[first] and first in blocked[i])]
            for i in group:
                self._advance(active[i])

    def _run_free(self, active, i):
        """Advance element ``i`` while its probes stay clear of the others' cones."""
        e = active[i]
        others = [a for k, a in enumerate(active) if k != i and not a.done]
        self._advance(e)
        if not others:
            while not e.done:
                self._advance(e)
            return
        v, w = self.sol.fd.v, self.sol.fd.w
        # the others are frozen while e runs; plain floats beat tiny numpy arrays here
        src = [(a.x, a.t) for a in others]
        while not e.done:
            for px, pt in self._probes([e])[0]:
                for sx, st in src:
                    lag = pt - st
                    gap = px - sx
                    if lag >= -_TOL and -w * lag - _TOL <= gap <= v * lag + _TOL:
                        return
            self._advance(e)


def propagate_all(
    moving: Sequence[MovingBottleneckSpec],
    signals: Sequence[TrafficSignalSpec],
    base: MoskowitzSolution,
    dt: float = 1.0,
    T: Optional[float] = None,
    n_lanes: int = 2,
) -> PropagationResult:
    """Compute every bottleneck trajectory and internal condition on a copy of ``base``.

    ``base`` itself is not modified; its own internal blocks (if any) are kept.
    """
    if dt <= 0:
        raise DomainError("time step must be positive")
    if T is not None and abs(T - base.T) > _TOL:
        base = MoskowitzSolution(base.fd, base.x_0, base.x_n, T, base.initial,
                                 base.upstream, base.downstream, base.internal)
    sol = base.with_internal(base.internal)
    for sig in signals:
        if not sol.x_0 < sig.x_pos < sol.x_n:
            raise DomainError(f"signal at {sig.x_pos} not strictly inside the road")

    runs = [BottleneckRun(spec, sol, dt, n_lanes, tag=f"mb{i}") for i, spec in enumerate(moving)]
    reds = [
        [_RedPhase(sig.x_pos, lo, hi, f"sig{j}") for lo, hi in signal_red_intervals(sig, sol.T)]
        for j, sig in enumerate(signals)
    ]
    sched = _Scheduler(sol, [*runs, *(r for group in reds for r in group)])
    rounds, forced = sched.run()
    return PropagationResult(
        solution=sol,
        trajectories=[r.segments for r in runs],
        exit_times=[r.exit_time for r in runs],
        final_states=[(r.x, r.t) for r in runs],
        bottleneck_blocks=[r.internal_blocks for r in runs],
        signal_blocks=[[sol.internal[p.block] for p in group] for group in reds],
        step_count=sum(e.steps for e in sched.elements),
        rounds=rounds,
        forced_rounds=forced,
    )
