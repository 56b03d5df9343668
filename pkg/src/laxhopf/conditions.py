"""Piecewise-linear value conditions for the Moskowitz function.

Every piece is affine on its own support and +inf elsewhere; the full value
condition is the pointwise minimum of all pieces. The additive constant of the
vehicle count is fixed by ``N(x_0, 0) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .errors import DomainError, SchemaError
from .fundamental_diagram import FundamentalDiagram

_TOL = 1e-9


@dataclass(frozen=True)
class InitialBlock:
    """Value ``-k*x + b`` on ``[x_lo, x_hi]`` at ``t = 0``."""

    x_lo: float
    x_hi: float
    k: float
    b: float

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise SchemaError(f"empty initial piece [{self.x_lo}, {self.x_hi}]")
        if self.k < 0:
            raise DomainError(f"negative density {self.k}")

    def value(self, x: float) -> float:
        if self.x_lo - _TOL <= x <= self.x_hi + _TOL:
            return -self.k * x + self.b
        return math.inf


@dataclass(frozen=True)
class UpstreamBlock:
    """Cumulative inflow ``q*t + d`` at ``x_0`` for ``t`` in ``[t_lo, t_hi]``."""

    t_lo: float
    t_hi: float
    q: float
    d: float

    def __post_init__(self):
        if not self.t_lo < self.t_hi:
            raise SchemaError(f"empty upstream piece [{self.t_lo}, {self.t_hi}]")
        if self.q < 0:
            raise DomainError(f"negative inflow {self.q}")

    def value(self, t: float) -> float:
        if self.t_lo - _TOL <= t <= self.t_hi + _TOL:
            return self.q * t + self.d
        return math.inf


@dataclass(frozen=True)
class DownstreamBlock:
    """Cumulative outflow ``p*t + b`` at ``x_n`` for ``t`` in ``[t_lo, t_hi]``."""

    t_lo: float
    t_hi: float
    p: float
    b: float

    def __post_init__(self):
        if not self.t_lo < self.t_hi:
            raise SchemaError(f"empty downstream piece [{self.t_lo}, {self.t_hi}]")
        if self.p < 0:
            raise DomainError(f"negative outflow {self.p}")

    def value(self, t: float) -> float:
        if self.t_lo - _TOL <= t <= self.t_hi + _TOL:
            return self.p * t + self.b
        return math.inf


@dataclass(frozen=True)
class InternalBlock:
    """Count constraint along the straight trajectory ``(t_b, x_b) -> (t_e, x_e)``.

    The count rises linearly from ``N_b`` to ``N_e``; speed and passing rate are
    derived, never stored. ``tag`` names the bottleneck that emitted the block.
    """

    t_b: float
    t_e: float
    x_b: float
    x_e: float
    N_b: float
    N_e: float
    tag: Optional[str] = None

    def __post_init__(self):
        if not self.t_b < self.t_e:
            raise SchemaError(f"internal block needs t_b < t_e, got {self.t_b}, {self.t_e}")
        if self.N_e < self.N_b - _TOL:
            raise DomainError("internal block passing rate must be nonnegative")

    @property
    def speed(self) -> float:
        return (self.x_e - self.x_b) / (self.t_e - self.t_b)

    @property
    def rate(self) -> float:
        return (self.N_e - self.N_b) / (self.t_e - self.t_b)

    def check_speed(self, fd: FundamentalDiagram):
        s = self.speed
        if not (-fd.w - _TOL <= s <= fd.v + _TOL):
            raise DomainError(f"internal block speed {s} outside [-w, v]")

    def position(self, t: float) -> float:
        return self.x_b + self.speed * (t - self.t_b)

    def value(self, x: float, t: float) -> float:
        if not (self.t_b - _TOL <= t <= self.t_e + _TOL):
            return math.inf
        if abs(x - self.position(t)) > 1e-7:
            return math.inf
        return self.N_b + self.rate * (t - self.t_b)


def _check_contiguous(pieces, start, label):
    if not pieces:
        raise SchemaError(f"no {label} pieces given")
    if start is not None and abs(pieces[0][0] - start) > _TOL:
        raise SchemaError(f"{label} pieces must start at {start}, got {pieces[0][0]}")
    for i, (lo, hi, _) in enumerate(pieces):
        if not lo < hi:
            raise SchemaError(f"{label} piece {i} is empty: [{lo}, {hi}]")
        if i:
            prev_hi = pieces[i - 1][1]
            if lo > prev_hi + _TOL:
                raise SchemaError(f"gap in {label} pieces between {prev_hi} and {lo} (piece {i})")
            if lo < prev_hi - _TOL:
                raise SchemaError(f"{label} pieces {i - 1} and {i} overlap on [{lo}, {prev_hi}]")


def build_initial(
    densities: Sequence[Tuple[float, float, float]],
    x_origin: Optional[float] = None,
    fd: Optional[FundamentalDiagram] = None,
) -> list[InitialBlock]:
    """Initial condition pieces from ``(x_lo, x_hi, k)`` density triples.

    Intercepts are chosen so the value at ``x_origin`` (default: the first
    ``x_lo``) is zero and adjacent pieces agree at their junction.
    """
    pieces = [tuple(map(float, p)) for p in densities]
    _check_contiguous(pieces, None, "initial")
    k_j = fd.k_j if fd is not None else math.inf
    for i, (_, _, k) in enumerate(pieces):
        if not 0.0 <= k <= k_j:
            raise DomainError(f"initial piece {i}: density {k} outside [0, {k_j}]")

    blocks = []
    count = 0.0  # -integral of k from the first x_lo to the current piece start
    for lo, hi, k in pieces:
        blocks.append(InitialBlock(lo, hi, k, count + k * lo))
        count -= k * (hi - lo)
    if x_origin is not None:
        shift = -_initial_value(blocks, float(x_origin))
        blocks = [InitialBlock(b.x_lo, b.x_hi, b.k, b.b + shift) for b in blocks]
    return blocks


def _initial_value(blocks, x):
    for b in blocks:
        if b.x_lo <= x <= b.x_hi:
            return b.value(x)
    raise SchemaError(f"origin {x} not covered by the initial pieces")


def _cumulative_pieces(flows, start_value, fd, label):
    pieces = [tuple(map(float, p)) for p in flows]
    _check_contiguous(pieces, 0.0, label)
    q_max = fd.q_max if fd is not None else math.inf
    out = []
    count = start_value
    for i, (lo, hi, q) in enumerate(pieces):
        if not 0.0 <= q <= q_max * (1 + _TOL):
            raise DomainError(f"{label} piece {i}: flow {q} outside [0, q_max={q_max}]")
        out.append((lo, hi, q, count - q * lo))
        count += q * (hi - lo)
    return out


def build_upstream(
    flows: Sequence[Tuple[float, float, float]],
    fd: Optional[FundamentalDiagram] = None,
) -> list[UpstreamBlock]:
    """Upstream cumulative-count pieces from ``(t_lo, t_hi, q)`` triples, starting at 0."""
    return [UpstreamBlock(*p) for p in _cumulative_pieces(flows, 0.0, fd, "upstream")]


def build_downstream(
    flows: Sequence[Tuple[float, float, float]],
    initial_count_at_exit: float,
    fd: Optional[FundamentalDiagram] = None,
) -> list[DownstreamBlock]:
    """Downstream pieces anchored at the initial count found at ``x_n``."""
    return [
        DownstreamBlock(*p)
        for p in _cumulative_pieces(flows, float(initial_count_at_exit), fd, "downstream")
    ]


def initial_count(blocks: Sequence[InitialBlock], x: float) -> float:
    """Value of the assembled initial condition at ``x`` (``+inf`` if uncovered)."""
    return min((b.value(x) for b in blocks), default=math.inf)
