"""Triangular fundamental diagram and closed-form quantities derived from it.

Units are SI throughout: speeds in m/s, densities in veh/m, flows in veh/s.
The congested wave speed ``w`` is stored as a positive magnitude, so backward
characteristics have slope ``-w`` and observer speeds range over ``[-w, v]``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError

_REL_TOL = 1e-9


@dataclass(frozen=True)
class FundamentalDiagram:
    """Triangular flow-density law ``Q(k)``.

    Attributes:
        v: free-flow speed [m/s]
        w: congested wave speed magnitude [m/s]
        k_c: critical density [veh/m]
        k_j: jam density [veh/m]
    """

    v: float
    w: float
    k_c: float
    k_j: float

    def __post_init__(self):
        if not (self.v > 0 and self.w > 0):
            raise DomainError(f"speeds must be positive (v={self.v}, w={self.w})")
        if not (0 < self.k_c < self.k_j):
            raise DomainError(f"need 0 < k_c < k_j (k_c={self.k_c}, k_j={self.k_j})")
        lhs = self.v * self.k_c
        rhs = self.w * (self.k_j - self.k_c)
        if abs(lhs - rhs) > _REL_TOL * max(abs(lhs), abs(rhs)):
            raise DomainError(
                f"capacity mismatch: v*k_c={lhs} but w*(k_j-k_c)={rhs}"
            )

    @classmethod
    def from_densities(cls, v: float, k_c: float, k_j: float) -> "FundamentalDiagram":
        """Build the diagram with ``w`` derived from capacity consistency."""
        if not (0 < k_c < k_j):
            raise DomainError(f"need 0 < k_c < k_j (k_c={k_c}, k_j={k_j})")
        return cls(v=v, w=v * k_c / (k_j - k_c), k_c=k_c, k_j=k_j)

    @property
    def q_max(self) -> float:
        return self.v * self.k_c

    def _check_density(self, k):
        if not (0.0 <= k <= self.k_j):
            raise DomainError(f"density {k} outside [0, {self.k_j}]")

    def flow(self, k: float) -> float:
        self._check_density(k)
        if k <= self.k_c:
            return self.v * k
        return self.q_max - self.w * (k - self.k_c)

    def legendre_transform(self, u: float) -> float:
        """Closed form of ``sup_k (Q(k) - u k)`` for an observer moving at ``u``."""
        if not (-self.w <= u <= self.v):
            raise DomainError(f"observer speed {u} outside [-w, v] = [{-self.w}, {self.v}]")
        return self.k_c * (self.v - u)

    def max_passing_rate(self, v_max: float, n_lanes: int) -> float:
        """Largest flow able to overtake a slow vehicle driving at ``v_max``."""
        if not (0.0 <= v_max <= self.v):
            raise DomainError(f"bottleneck speed {v_max} outside [0, {self.v}]")
        if int(n_lanes) != n_lanes or n_lanes < 1:
            raise DomainError(f"lane count must be a positive integer, got {n_lanes}")
        return (self.v - v_max) * self.k_c * (n_lanes - 1) / n_lanes

    def congested_speed(self, k0: float) -> float:
        """Speed of congested traffic at density ``k0`` (``k_c <= k0 <= k_j``)."""
        if k0 <= 0.0:
            raise DomainError("congested speed undefined at zero density")
        # the branch endpoints get a relative slack so clamped estimates pass
        if k0 < self.k_c * (1 - _REL_TOL) or k0 > self.k_j * (1 + _REL_TOL):
            raise DomainError(f"density {k0} not on the congested branch")
        speed = -self.w * (k0 - self.k_j) / k0
        return min(max(speed, 0.0), self.v)

    def congested_density(self, q: float) -> float:
        """Congested-branch density carrying flow ``q``."""
        if not (0.0 <= q <= self.q_max * (1 + _REL_TOL)):
            raise DomainError(f"flow {q} outside [0, q_max]")
        return self.k_j - q / self.w

    def free_density(self, q: float) -> float:
        if not (0.0 <= q <= self.q_max * (1 + _REL_TOL)):
            raise DomainError(f"flow {q} outside [0, q_max]")
        return q / self.v

    @property
    def max_wave_speed(self) -> float:
        return max(self.v, self.w)
