"""Grid-free evaluation of the Moskowitz function by the Lax-Hopf formula.

For a triangular diagram the cost of reaching ``(x, t)`` from a source point
``(x_s, t_s)`` along a straight characteristic is ``k_c*(v*(t - t_s) - (x - x_s))``,
admissible when the slope lies in ``[-w, v]``. Every condition block is affine
along a segment, so its solution component has a closed form: a translated
strip plus a fan. The solution is the minimum over all components
(inf-morphism).

Kernels operate on a packed block table so that scalar probes issued by the
bottleneck propagation and full grid evaluations share one compiled path.
Row layout: ``[kind, a0, a1, a2, a3, a4, a5]`` with kind 0 = initial
``(x_lo, x_hi, k, b)``, 1 = upstream ``(t_lo, t_hi, q, d)``, 2 = downstream
``(t_lo, t_hi, p, b)``, 3 = internal ``(t_b, t_e, x_b, x_e, N_b, N_e)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np

from .conditions import DownstreamBlock, InitialBlock, InternalBlock, UpstreamBlock
from .errors import DomainError
from .fundamental_diagram import FundamentalDiagram

INF = math.inf
KIND_NAMES = ("initial", "upstream", "downstream", "internal")

# feasibility slack on cone and support boundaries [s or m]
_EPS = 1e-9


@numba.njit(cache=True)
def _initial_component(x, t, x_lo, x_hi, k, b, v, w, k_c):
    if t < -_EPS:
        return INF
    reach_lo = x - v * t  # leftmost source reachable along a +v characteristic
    reach_hi = x + w * t  # rightmost source reachable along a -w characteristic
    if reach_hi < x_lo - _EPS or reach_lo > x_hi + _EPS:
        return INF
    if k <= k_c:
        # free flow: the cheapest source is the leftmost admissible one
        if reach_lo >= x_lo:
            return k * (v * t - x) + b
        return k_c * (v * t - x) + (k_c - k) * x_lo + b
    # congested: the cheapest source is the rightmost admissible one
    if reach_hi <= x_hi:
        return -k * x + b + (k_c * (v + w) - k * w) * t
    return k_c * (v * t - x) + (k_c - k) * x_hi + b


@numba.njit(cache=True)
def _upstream_component(x, t, x_0, t_lo, t_hi, q, d, v, k_c):
    dist = x - x_0
    if dist < -_EPS:
        return INF
    if dist < 0.0:
        dist = 0.0
    departure = t - dist / v  # entry time of the +v characteristic through (x, t)
    if departure < t_lo - _EPS:
        return INF
    if departure <= t_hi:
        return d + q * departure
    return d + q * t_hi + k_c * ((t - t_hi) * v - dist)


@numba.njit(cache=True)
def _downstream_component(x, t, x_n, t_lo, t_hi, p, b, v, w, k_c):
    dist = x_n - x
    if dist < -_EPS:
        return INF
    if dist < 0.0:
        dist = 0.0
    departure = t - dist / w  # exit time of the -w characteristic through (x, t)
    if departure < t_lo - _EPS:
        return INF
    if departure <= t_hi:
        return b + p * t + (k_c * (v + w) - p) * dist / w
    return b + p * t_hi + k_c * ((t - t_hi) * v + dist)


@numba.njit(cache=True)
def _capture_time(x, t, t_b, t_e, x_b, s, v, w):
    """Latest admissible departure time from the trajectory, or -inf."""
    traj = x_b + s * (t - t_b)
    gap = x - traj
    latest = min(t_e, t)
    if v > s:
        latest = min(latest, t - gap / (v - s))
    elif gap > _EPS:
        return -INF
    if s > -w:
        latest = min(latest, t + gap / (s + w))
    elif gap < -_EPS:
        return -INF
    return latest


@numba.njit(cache=True)
def _internal_component(x, t, t_b, t_e, x_b, x_e, N_b, N_e, v, w, k_c):
    if t < t_b - _EPS:
        return INF
    dur = t_e - t_b
    s = (x_e - x_b) / dur
    r = (N_e - N_b) / dur
    latest = _capture_time(x, t, t_b, t_e, x_b, s, v, w)
    if latest < t_b - _EPS:
        return INF
    if latest < t_b:
        latest = t_b
    # the objective is affine in the departure time; its slope decides the end
    if r - k_c * (v - s) > 0.0:
        t_cap = t_b
    else:
        t_cap = latest
    x_cap = x_b + s * (t_cap - t_b)
    return N_b + r * (t_cap - t_b) + k_c * (v * (t - t_cap) - (x - x_cap))


@numba.njit(cache=True)
def _row_component(row, x, t, x_0, x_n, v, w, k_c):
    kind = int(row[0])
    if kind == 0:
        return _initial_component(x, t, row[1], row[2], row[3], row[4], v, w, k_c)
    if kind == 1:
        return _upstream_component(x, t, x_0, row[1], row[2], row[3], row[4], v, k_c)
    if kind == 2:
        return _downstream_component(x, t, x_n, row[1], row[2], row[3], row[4], v, w, k_c)
    return _internal_component(
        x, t, row[1], row[2], row[3], row[4], row[5], row[6], v, w, k_c
    )


@numba.njit(cache=True)
def _min_over_table(table, x, t, x_0, x_n, v, w, k_c):
    best = INF
    arg = -1
    for i in range(table.shape[0]):
        val = _row_component(table[i], x, t, x_0, x_n, v, w, k_c)
        if val < best:
            best = val
            arg = i
    return best, arg


@numba.njit(cache=True)
def _values_at(table, xs, ts, x_0, x_n, v, w, k_c):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = _min_over_table(table, xs[i], ts[i], x_0, x_n, v, w, k_c)[0]
    return out


@numba.njit(cache=True)
def _density_grid(table, xs, ts, delta, x_0, x_n, v, w, k_c, k_j):
    out = np.empty((ts.shape[0], xs.shape[0]))
    for j in range(ts.shape[0]):
        t = ts[j]
        for i in range(xs.shape[0]):
            lo, hi = _probe_window(xs[i], delta, x_0, x_n)
            n_lo = _min_over_table(table, lo, t, x_0, x_n, v, w, k_c)[0]
            n_hi = _min_over_table(table, hi, t, x_0, x_n, v, w, k_c)[0]
            k = -(n_hi - n_lo) / (hi - lo)
            out[j, i] = min(max(k, 0.0), k_j)
    return out


@numba.njit(cache=True)
def _probe_window(x, delta, x_0, x_n):
    """Centred probe of length ``delta``, shifted to stay inside the road."""
    if delta >= x_n - x_0:
        return x_0, x_n
    lo = x - 0.5 * delta
    hi = x + 0.5 * delta
    if lo < x_0:
        return x_0, x_0 + delta
    if hi > x_n:
        return x_n - delta, x_n
    return lo, hi


def _row(kind, *params):
    # plain tuple: assigning it into the table is much cheaper than building an array
    return (float(kind), *params) + (0.0,) * (6 - len(params))


def _block_row(block) -> tuple:
    if isinstance(block, InitialBlock):
        return _row(0, block.x_lo, block.x_hi, block.k, block.b)
    if isinstance(block, UpstreamBlock):
        return _row(1, block.t_lo, block.t_hi, block.q, block.d)
    if isinstance(block, DownstreamBlock):
        return _row(2, block.t_lo, block.t_hi, block.p, block.b)
    if isinstance(block, InternalBlock):
        return _row(3, block.t_b, block.t_e, block.x_b, block.x_e, block.N_b, block.N_e)
    raise TypeError(f"not a condition block: {block!r}")


# --- per-block solution components -----------------------------------------


def _vectorized(kernel, *args):
    x, t = np.broadcast_arrays(np.asarray(args[0], float), np.asarray(args[1], float))
    if x.ndim == 0:
        return kernel(float(x), float(t), *args[2:])
    out = np.fromiter(
        (kernel(xi, ti, *args[2:]) for xi, ti in zip(x.ravel(), t.ravel())),
        float,
        count=x.size,
    )
    return out.reshape(x.shape)


def solve_initial_block(block: InitialBlock, fd: FundamentalDiagram, x, t):
    """Solution component of one initial piece (``+inf`` outside its cone)."""
    return _vectorized(
        _initial_component, x, t, block.x_lo, block.x_hi, block.k, block.b,
        fd.v, fd.w, fd.k_c,
    )


def solve_upstream_block(block: UpstreamBlock, fd: FundamentalDiagram, x_0: float, x, t):
    return _vectorized(
        _upstream_component, x, t, x_0, block.t_lo, block.t_hi, block.q, block.d,
        fd.v, fd.k_c,
    )


def solve_downstream_block(block: DownstreamBlock, fd: FundamentalDiagram, x_n: float, x, t):
    return _vectorized(
        _downstream_component, x, t, x_n, block.t_lo, block.t_hi, block.p, block.b,
        fd.v, fd.w, fd.k_c,
    )


def solve_internal_block(block: InternalBlock, fd: FundamentalDiagram, x, t):
    """Solution component of a trajectory constraint.

    The departure (capture) time is the latest point on the trajectory from
    which ``(x, t)`` is reachable: limited by the forward free-flow line when the
    point is ahead of the trajectory, by the backward congested line when it is
    behind, and by the block end otherwise.
    """
    return _vectorized(
        _internal_component, x, t, block.t_b, block.t_e, block.x_b, block.x_e,
        block.N_b, block.N_e, fd.v, fd.w, fd.k_c,
    )


def capture_time(block: InternalBlock, fd: FundamentalDiagram, x: float, t: float) -> float:
    """Departure time on the trajectory of the optimal path to ``(x, t)``.

    Returns ``nan`` when the point is outside the block's domain of influence.
    """
    latest = _capture_time(x, t, block.t_b, block.t_e, block.x_b, block.speed, fd.v, fd.w)
    if latest < block.t_b - _EPS:
        return math.nan
    if block.rate - fd.k_c * (fd.v - block.speed) > 0.0:
        return block.t_b
    return max(latest, block.t_b)


# --- assembled solution -----------------------------------------------------


@dataclass(frozen=True)
class EvalResult:
    value: float
    contributing_block: Optional[tuple[str, int]]


@dataclass
class MoskowitzSolution:
    """Initial, boundary and internal condition blocks on ``[x_0, x_n] x [0, T]``.

    Internal blocks may be appended (or the last one extended) while bottlenecks
    are propagated; everything else is fixed at construction.
    """

    fd: FundamentalDiagram
    x_0: float
    x_n: float
    T: float
    initial: Sequence[InitialBlock]
    upstream: Sequence[UpstreamBlock] = ()
    downstream: Sequence[DownstreamBlock] = ()
    internal: list[InternalBlock] = field(default_factory=list)

    def __post_init__(self):
        if not self.x_0 < self.x_n or self.T <= 0:
            raise DomainError(f"empty domain [{self.x_0}, {self.x_n}] x [0, {self.T}]")
        self.initial = tuple(self.initial)
        self.upstream = tuple(self.upstream)
        self.downstream = tuple(self.downstream)
        self.internal = list(self.internal)
        for b in self.initial:
            if b.x_lo < self.x_0 - _EPS or b.x_hi > self.x_n + _EPS:
                raise DomainError(f"initial piece {b} outside the road")
        for b in (*self.upstream, *self.downstream):
            if b.t_lo < -_EPS or b.t_hi > self.T + _EPS:
                raise DomainError(f"boundary piece {b} outside [0, T]")
        base = [*self.initial, *self.upstream, *self.downstream]
        self._n_base = len(base)
        self._table = np.zeros((max(16, 2 * len(base)), 7))
        for i, b in enumerate(base):
            self._table[i] = _block_row(b)
        self._view = self._table[: self._n_base]
        for i, b in enumerate(self.internal):
            self._check_internal(b)
            self._write_internal(i, b)
        self._fd_args = (self.x_0, self.x_n, self.fd.v, self.fd.w, self.fd.k_c)

    # block management

    def _check_internal(self, block):
        block.check_speed(self.fd)
        if block.t_b < -_EPS or block.t_e > self.T + 1e-6:
            raise DomainError(f"internal block {block} outside [0, T]")

    def _write_internal(self, i, block):
        row = self._n_base + i
        if row >= self._table.shape[0]:
            grown = np.zeros((2 * self._table.shape[0], 7))
            grown[: self._table.shape[0]] = self._table
            self._table = grown
        self._table[row] = _block_row(block)
        self._view = self._table[: self._n_base + len(self.internal)]

    def add_internal(self, block: InternalBlock) -> int:
        self._check_internal(block)
        self.internal.append(block)
        self._write_internal(len(self.internal) - 1, block)
        return len(self.internal) - 1

    def replace_internal(self, index: int, block: InternalBlock):
        self._check_internal(block)
        self.internal[index] = block
        self._write_internal(index, block)

    def with_internal(self, blocks: Sequence[InternalBlock] = ()) -> "MoskowitzSolution":
        """Copy sharing the base conditions, with the given internal blocks."""
        return MoskowitzSolution(
            self.fd, self.x_0, self.x_n, self.T,
            self.initial, self.upstream, self.downstream, list(blocks),
        )

    @property
    def table(self) -> np.ndarray:
        return self._table[: self._n_base + len(self.internal)]

    def block_id(self, row: int) -> tuple[str, int]:
        counts = (len(self.initial), len(self.upstream), len(self.downstream))
        for kind, n in enumerate(counts):
            if row < n:
                return KIND_NAMES[kind], row
            row -= n
        return "internal", row

    # evaluation

    def contains(self, x: float, t: float) -> bool:
        return (
            self.x_0 - _EPS <= x <= self.x_n + _EPS and -_EPS <= t <= self.T + _EPS
        )

    def value(self, x: float, t: float) -> float:
        """N(x, t) without domain checks (hot path for propagation probes)."""
        return _min_over_table(self._view, float(x), float(t), *self._fd_args)[0]

    def values(self, x, t) -> np.ndarray:
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        flat = _values_at(self.table, x.ravel().copy(), t.ravel().copy(), *self._fd_args)
        return flat.reshape(x.shape)


def evaluate(sol: MoskowitzSolution, x: float, t: float) -> EvalResult:
    """Minimum over all solution components, with the (first) argmin block."""
    if not sol.contains(x, t):
        raise DomainError(
            f"point ({x}, {t}) outside [{sol.x_0}, {sol.x_n}] x [0, {sol.T}]"
        )
    value, row = _min_over_table(sol.table, float(x), float(t), *sol._fd_args)
    return EvalResult(value, sol.block_id(row) if row >= 0 else None)


def density(sol: MoskowitzSolution, x: float, t: float, delta_x: float = 1.0) -> float:
    """Density ``-dN/dx`` by a centred difference over ``delta_x``, clamped to ``[0, k_j]``.

    Near the road ends the probe window is shifted inward (one-sided difference).
    """
    if delta_x <= 0:
        raise DomainError("probe length must be positive")
    lo, hi = _probe_window(float(x), float(delta_x), sol.x_0, sol.x_n)
    k = -(sol.value(hi, t) - sol.value(lo, t)) / (hi - lo)
    return min(max(k, 0.0), sol.fd.k_j)


def grid_axis(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    if not math.isclose(lo + n * step, hi, rel_tol=1e-9, abs_tol=1e-9):
        n = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


@dataclass(frozen=True)
class DensityGrid:
    ts: np.ndarray
    xs: np.ndarray
    k: np.ndarray  # shape (len(ts), len(xs)), one row per time


def grid(
    sol: MoskowitzSolution, dx: float, dt: float, delta_x: Optional[float] = None
) -> DensityGrid:
    """Density sampled on the regular grid of spacing ``dx`` by ``dt``.

    The default probe length is ``2*dx`` (at least 1 m).
    """
    if dx <= 0 or dt <= 0:
        raise DomainError("grid spacings must be positive")
    delta = max(2.0 * dx, 1.0) if delta_x is None else float(delta_x)
    xs = grid_axis(sol.x_0, sol.x_n, dx)
    ts = grid_axis(0.0, sol.T, dt)
    k = _density_grid(
        sol.table, xs, ts, delta, sol.x_0, sol.x_n, sol.fd.v, sol.fd.w, sol.fd.k_c, sol.fd.k_j
    )
    return DensityGrid(ts, xs, k)


def cell_averages(sol: MoskowitzSolution, edges: np.ndarray, t: float) -> np.ndarray:
    """Exact mean density of each cell ``[edges[i], edges[i+1]]`` at time ``t``."""
    n = sol.values(edges, np.full_like(edges, t, dtype=float))
    return -np.diff(n) / np.diff(edges)
