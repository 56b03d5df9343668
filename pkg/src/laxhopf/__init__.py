"""Semi-analytic Lax-Hopf solver for traffic with moving and fixed bottlenecks."""

from .bottleneck_propagation import MovingBottleneckSpec, Regime, TrajectorySegment, propagate
from .conditions import (
    DownstreamBlock,
    InitialBlock,
    InternalBlock,
    UpstreamBlock,
    build_downstream,
    build_initial,
    build_upstream,
)
from .errors import ConfigError, DomainError, SchemaError
from .fundamental_diagram import FundamentalDiagram
from .lax_hopf import MoskowitzSolution, density, evaluate, grid
from .multi_bottleneck import TrafficSignalSpec, propagate_all
from .scenario import Scenario, builtin_scenario, load_scenario

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError", "DownstreamBlock", "FundamentalDiagram", "InitialBlock",
    "InternalBlock", "MoskowitzSolution", "MovingBottleneckSpec", "Regime", "Scenario",
    "SchemaError", "TrafficSignalSpec", "TrajectorySegment", "UpstreamBlock",
    "build_downstream", "build_initial", "build_upstream", "builtin_scenario", "density",
    "evaluate", "grid", "load_scenario", "propagate", "propagate_all",
]
