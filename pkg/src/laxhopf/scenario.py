"""Scenario documents: JSON with explicit units in every field name.

Example::

    {
      "fundamental_diagram": {"v_mps": 30, "k_c_veh_per_m": 0.04, "k_j_veh_per_m": 0.2},
      "lanes": 2,
      "domain": {"x_0_m": 0, "x_n_m": 3000, "T_s": 300},
      "initial_density": [{"x_lo_m": 0, "x_hi_m": 3000, "k_veh_per_m": 0.02}],
      "upstream_flow": [{"t_lo_s": 0, "t_hi_s": 300, "q_veh_per_s": 0.6}],
      "downstream_flow": [{"t_lo_s": 0, "t_hi_s": 300, "q_veh_per_s": 0.6}],
      "moving_bottlenecks": [{"x_entry_m": 1500, "t_entry_s": 150, "x_exit_m": 3000, "v_max_mps": 5}],
      "signals": [{"x_m": 500, "cycle_s": 200, "green_s": 120, "offset_s": 0}]
    }

``w_mps`` is optional in the diagram block; when given it must agree with
``v*k_c = w*(k_j - k_c)``. ``dt_s`` (propagation step) defaults to 1 s.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from .bottleneck_propagation import MovingBottleneckSpec
from .conditions import build_downstream, build_initial, build_upstream, initial_count
from .errors import DomainError, SchemaError
from .fundamental_diagram import FundamentalDiagram
from .lax_hopf import MoskowitzSolution
from .multi_bottleneck import TrafficSignalSpec


@dataclass
class Scenario:
    fd: FundamentalDiagram
    n_lanes: int
    x_0: float
    x_n: float
    T: float
    initial: list[tuple[float, float, float]]
    upstream: list[tuple[float, float, float]]
    downstream: list[tuple[float, float, float]]
    moving: list[MovingBottleneckSpec] = field(default_factory=list)
    signals: list[TrafficSignalSpec] = field(default_factory=list)
    dt: float = 1.0
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def base_solution(self) -> MoskowitzSolution:
        ini = build_initial(self.initial, self.x_0, self.fd)
        up = build_upstream(self.upstream, self.fd)
        down = build_downstream(self.downstream, initial_count(ini, self.x_n), self.fd)
        return MoskowitzSolution(self.fd, self.x_0, self.x_n, self.T, ini, up, down)

    def cumulative_inflow(self, t: Optional[float] = None) -> float:
        t = self.T if t is None else t
        return sum(q * max(0.0, min(hi, t) - lo) for lo, hi, q in self.upstream)

    def initial_vehicles(self) -> float:
        return sum(k * (hi - lo) for lo, hi, k in self.initial)

    def to_dict(self) -> dict:
        doc = {
            "name": self.name,
            "fundamental_diagram": {
                "v_mps": self.fd.v,
                "k_c_veh_per_m": self.fd.k_c,
                "k_j_veh_per_m": self.fd.k_j,
                "w_mps": self.fd.w,
            },
            "lanes": self.n_lanes,
            "domain": {"x_0_m": self.x_0, "x_n_m": self.x_n, "T_s": self.T},
            "dt_s": self.dt,
            "initial_density": [
                {"x_lo_m": a, "x_hi_m": b, "k_veh_per_m": k} for a, b, k in self.initial
            ],
            "upstream_flow": [
                {"t_lo_s": a, "t_hi_s": b, "q_veh_per_s": q} for a, b, q in self.upstream
            ],
            "downstream_flow": [
                {"t_lo_s": a, "t_hi_s": b, "q_veh_per_s": q} for a, b, q in self.downstream
            ],
            "moving_bottlenecks": [
                {"x_entry_m": m.x_entry, "t_entry_s": m.t_entry, "x_exit_m": m.x_exit,
                 "v_max_mps": m.v_max}
                for m in self.moving
            ],
            "signals": [
                {"x_m": s.x_pos, "cycle_s": s.cycle, "green_s": s.green, "offset_s": s.offset}
                for s in self.signals
            ],
        }
        if self.metadata:
            doc["metadata"] = self.metadata
        return doc

    def dump(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


class _Reader:
    """Field access with path-qualified schema errors."""

    def __init__(self, text: Optional[str]):
        self.text = text

    def fail(self, path, message):
        line = _locate(self.text, path) if self.text else None
        where = f"{path} (line {line})" if line else path
        raise SchemaError(message, where)

    def get(self, obj, key, path, kind=float, required=True, default=None):
        here = f"{path}.{key}" if path else key
        if not isinstance(obj, dict):
            self.fail(path or "<root>", "expected an object")
        if key not in obj:
            if required:
                self.fail(here, "missing required field")
            return default
        val = obj[key]
        if kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                self.fail(here, f"expected a number, got {val!r}")
            return float(val)
        if kind is int:
            if isinstance(val, bool) or not isinstance(val, int):
                self.fail(here, f"expected an integer, got {val!r}")
            return val
        if kind is list:
            if not isinstance(val, list):
                self.fail(here, "expected a list")
            return val
        if kind is dict:
            if not isinstance(val, dict):
                self.fail(here, "expected an object")
            return val
        return val


def _locate(text: str, path: str) -> Optional[int]:
    """Best-effort line number of the last key of ``path`` in the source text.

    A key that is absent (a missing field) resolves to its parent's line.
    """
    parts = re.findall(r"([A-Za-z_][A-Za-z0-9_]*)(?:\[(\d+)\])?", path)
    if not parts:
        return None
    pos = 0
    for key, idx in parts:
        m = re.search(rf'"{re.escape(key)}"\s*:', text[pos:])
        if m is None:
            break
        pos += m.end()
        if idx:
            # skip to the idx-th object inside the list
            depth, count, i = 0, -1, pos
            while i < len(text):
                c = text[i]
                if c in "[{":
                    depth += 1
                    if c == "{" and depth == 2:
                        count += 1
                        if count == int(idx):
                            pos = i
                            break
                elif c in "]}":
                    depth -= 1
                    if depth == 0:
                        break
                i += 1
    return text.count("\n", 0, pos) + 1 if pos else None


def _pieces(reader, doc, key, lo_key, hi_key, val_key):
    rows = reader.get(doc, key, "", list)
    out = []
    for i, row in enumerate(rows):
        path = f"{key}[{i}]"
        out.append((
            reader.get(row, lo_key, path),
            reader.get(row, hi_key, path),
            reader.get(row, val_key, path),
        ))
    for i in range(1, len(out)):
        prev_hi, lo = out[i - 1][1], out[i][0]
        if lo < prev_hi - 1e-9:
            reader.fail(f"{key}[{i}]", f"pieces {i - 1} and {i} overlap on [{lo}, {prev_hi}]")
        if lo > prev_hi + 1e-9:
            reader.fail(f"{key}[{i}]", f"gap between pieces {i - 1} and {i}: [{prev_hi}, {lo}]")
    return out


def parse_scenario(doc: Any, text: Optional[str] = None) -> Scenario:
    """Validate a decoded scenario document; ``text`` enables line numbers in errors."""
    r = _Reader(text)
    fd_doc = r.get(doc, "fundamental_diagram", "", dict)
    v = r.get(fd_doc, "v_mps", "fundamental_diagram")
    k_c = r.get(fd_doc, "k_c_veh_per_m", "fundamental_diagram")
    k_j = r.get(fd_doc, "k_j_veh_per_m", "fundamental_diagram")
    w = r.get(fd_doc, "w_mps", "fundamental_diagram", required=False)
    try:
        fd = FundamentalDiagram.from_densities(v, k_c, k_j)
        if w is not None:
            fd = FundamentalDiagram(v, w, k_c, k_j)
    except DomainError as exc:
        r.fail("fundamental_diagram", str(exc))

    lanes = r.get(doc, "lanes", "", int)
    if lanes < 1:
        r.fail("lanes", "lane count must be at least 1")
    dom = r.get(doc, "domain", "", dict)
    x_0 = r.get(dom, "x_0_m", "domain")
    x_n = r.get(dom, "x_n_m", "domain")
    T = r.get(dom, "T_s", "domain")
    if not x_0 < x_n or T <= 0:
        r.fail("domain", "need x_0_m < x_n_m and T_s > 0")
    dt = r.get(doc, "dt_s", "", required=False, default=1.0)
    if dt <= 0:
        r.fail("dt_s", "time step must be positive")

    initial = _pieces(r, doc, "initial_density", "x_lo_m", "x_hi_m", "k_veh_per_m")
    upstream = _pieces(r, doc, "upstream_flow", "t_lo_s", "t_hi_s", "q_veh_per_s")
    downstream = _pieces(r, doc, "downstream_flow", "t_lo_s", "t_hi_s", "q_veh_per_s")
    if not initial or abs(initial[0][0] - x_0) > 1e-9 or abs(initial[-1][1] - x_n) > 1e-9:
        r.fail("initial_density", f"pieces must cover [{x_0}, {x_n}]")
    for key, rows in (("upstream_flow", upstream), ("downstream_flow", downstream)):
        if not rows or abs(rows[0][0]) > 1e-9 or rows[-1][1] < T - 1e-9:
            r.fail(key, f"pieces must cover [0, {T}]")

    moving = []
    for i, m in enumerate(r.get(doc, "moving_bottlenecks", "", list, required=False, default=[])):
        path = f"moving_bottlenecks[{i}]"
        try:
            spec = MovingBottleneckSpec(
                x_entry=r.get(m, "x_entry_m", path),
                t_entry=r.get(m, "t_entry_s", path),
                x_exit=r.get(m, "x_exit_m", path, required=False, default=x_n),
                v_max=r.get(m, "v_max_mps", path),
            )
        except DomainError as exc:
            r.fail(path, str(exc))
        if spec.x_entry < x_0 or spec.x_exit > x_n:
            r.fail(path, "bottleneck path leaves the road")
        if spec.v_max > fd.v:
            r.fail(f"{path}.v_max_mps", f"exceeds free-flow speed {fd.v}")
        moving.append(spec)

    signals = []
    for i, s in enumerate(r.get(doc, "signals", "", list, required=False, default=[])):
        path = f"signals[{i}]"
        try:
            sig = TrafficSignalSpec(
                x_pos=r.get(s, "x_m", path),
                cycle=r.get(s, "cycle_s", path),
                green=r.get(s, "green_s", path),
                offset=r.get(s, "offset_s", path, required=False, default=0.0),
            )
        except DomainError as exc:
            r.fail(path, str(exc))
        if not x_0 < sig.x_pos < x_n:
            r.fail(f"{path}.x_m", "signal must lie strictly inside the road")
        signals.append(sig)

    scen = Scenario(
        fd=fd, n_lanes=lanes, x_0=x_0, x_n=x_n, T=T,
        initial=initial, upstream=upstream, downstream=downstream,
        moving=moving, signals=signals, dt=dt,
        name=str(doc.get("name", "")), metadata=dict(doc.get("metadata", {})),
    )
    try:
        scen.base_solution()
    except (DomainError, SchemaError) as exc:
        r.fail("<conditions>", str(exc))
    return scen


def load_scenario(path) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", f"line {exc.lineno}") from exc
    return parse_scenario(doc, text)


def builtin_scenario(name: str) -> Scenario:
    """One of the packaged scenarios, e.g. ``"single_bottleneck"``."""
    ref = resources.files("laxhopf.scenarios").joinpath(f"{name}.json")
    text = ref.read_text(encoding="utf-8")
    return parse_scenario(json.loads(text), text)


def builtin_path(name: str) -> Path:
    return Path(str(resources.files("laxhopf.scenarios").joinpath(f"{name}.json")))
