"""Genetic algorithm over bus entry times and signal timings.

A chromosome is a flat gene vector::

    [offset_0, ..., offset_{m-1}, cycle_scale_0, green_scale_0, ..., cycle_scale_{s-1}, green_scale_{s-1}]

Offsets shift each moving bottleneck's entry time (s); scales multiply each
signal's cycle and green durations. Every candidate is scored by a full
semi-analytic simulation of the decoded scenario.
"""

from __future__ import annotations

import dataclasses
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from .errors import ConfigError
from .multi_bottleneck import PropagationResult, TrafficSignalSpec, propagate_all
from .scenario import Scenario

Objective = Literal["outflow", "delay"]

# smallest red left after repairing green < cycle, as a fraction of the cycle
_MIN_RED_FRACTION = 1e-3


@dataclass(frozen=True)
class Chromosome:
    genes: tuple[float, ...]
    n_moving: int
    n_signals: int

    def __post_init__(self):
        if len(self.genes) != self.n_moving + 2 * self.n_signals:
            raise ConfigError(
                f"expected {self.n_moving + 2 * self.n_signals} genes, got {len(self.genes)}"
            )

    @classmethod
    def identity(cls, n_moving: int, n_signals: int) -> "Chromosome":
        return cls((0.0,) * n_moving + (1.0,) * (2 * n_signals), n_moving, n_signals)

    @classmethod
    def for_scenario(cls, scenario: Scenario, genes: Sequence[float]) -> "Chromosome":
        return cls(tuple(float(g) for g in genes), len(scenario.moving), len(scenario.signals))

    @property
    def entry_offsets(self) -> tuple[float, ...]:
        return self.genes[: self.n_moving]

    @property
    def cycle_scales(self) -> tuple[float, ...]:
        return self.genes[self.n_moving :: 2]

    @property
    def green_scales(self) -> tuple[float, ...]:
        return self.genes[self.n_moving + 1 :: 2]

    def __len__(self) -> int:
        return len(self.genes)


@dataclass(frozen=True)
class GAConfig:
    """Hyperparameters. Defaults keep a tournament share of one tenth of the population."""

    population: int = 30
    generations: int = 20
    tournament: int = 3
    p_mutation: float = 0.1
    seed: int = 0
    offset_bound: float = 10.0
    beta: float = 0.1
    elitism: int = 1

    def __post_init__(self):
        if self.population < 2:
            raise ConfigError("population must be at least 2")
        if not 1 <= self.tournament <= self.population:
            raise ConfigError("tournament size must lie in [1, population]")
        if not 0.0 <= self.p_mutation <= 1.0:
            raise ConfigError("mutation probability must lie in [0, 1]")
        if self.generations < 0:
            raise ConfigError("generations must be non-negative")
        if not 0 <= self.elitism < self.population:
            raise ConfigError("elitism must lie in [0, population)")
        if self.offset_bound < 0 or not 0 <= self.beta < 1:
            raise ConfigError("need offset_bound >= 0 and 0 <= beta < 1")

    def bounds(self, n_moving: int, n_signals: int) -> np.ndarray:
        """``(n_genes, 2)`` array of lower/upper gene bounds."""
        lo = [-self.offset_bound] * n_moving + [1.0 - self.beta] * (2 * n_signals)
        hi = [self.offset_bound] * n_moving + [1.0 + self.beta] * (2 * n_signals)
        return np.column_stack([lo, hi])


@dataclass
class FitnessReport:
    objective: str
    best: list[float]  # per generation, generation 0 is the initial population
    mean: list[float]
    best_chromosome: Chromosome
    best_fitness: float
    baseline: float
    wall_time: float
    evaluations: int = 0  # simulations actually run (cache misses)

    @property
    def improvement(self) -> float:
        """Relative gain over the baseline, positive when the objective improved."""
        if self.baseline == 0:
            return 0.0
        gain = self.best_fitness - self.baseline
        if self.objective == "delay":
            gain = -gain
        return gain / abs(self.baseline)


def decode(ch: Chromosome, scenario: Scenario) -> Scenario:
    """Scenario with shifted entry times and rescaled signals; infeasible values are clamped."""
    if ch.n_moving != len(scenario.moving) or ch.n_signals != len(scenario.signals):
        raise ConfigError("chromosome layout does not match the scenario")
    moving = []
    for spec, off in zip(scenario.moving, ch.entry_offsets):
        t = min(max(spec.t_entry + off, 0.0), scenario.T)
        moving.append(dataclasses.replace(spec, t_entry=t))
    signals = []
    for sig, cs, gs in zip(scenario.signals, ch.cycle_scales, ch.green_scales):
        cycle = sig.cycle * cs
        green = min(sig.green * gs, cycle * (1.0 - _MIN_RED_FRACTION))
        signals.append(TrafficSignalSpec(sig.x_pos, cycle, green, sig.offset))
    return dataclasses.replace(scenario, moving=moving, signals=signals)


def simulate(scenario: Scenario, base=None) -> PropagationResult:
    base = scenario.base_solution() if base is None else base
    return propagate_all(scenario.moving, scenario.signals, base, scenario.dt,
                         n_lanes=scenario.n_lanes)


def outflow_of(scenario: Scenario, result: PropagationResult) -> float:
    """``N(x_n, T)``: the downstream cumulative count at the horizon."""
    return float(result.solution.value(scenario.x_n, scenario.T))


def bottleneck_delays(scenario: Scenario, result: PropagationResult) -> list[float]:
    """Actual minus free-flow travel time of each moving bottleneck.

    Buses still en route at ``T`` count the time spent so far; buses that never
    entered contribute nothing.
    """
    out = []
    for spec, t_exit, (x, t) in zip(scenario.moving, result.exit_times, result.final_states):
        if spec.t_entry >= scenario.T:
            out.append(0.0)
        elif t_exit is not None:
            out.append((t_exit - spec.t_entry) - (spec.x_exit - spec.x_entry) / spec.v_max)
        else:
            out.append((t - spec.t_entry) - (x - spec.x_entry) / spec.v_max)
    return out


def delay_of(scenario: Scenario, result: PropagationResult) -> float:
    """Total bus delay in seconds."""
    return float(sum(bottleneck_delays(scenario, result)))


def fitness_outflow(ch: Chromosome, scenario: Scenario, base=None) -> float:
    s = decode(ch, scenario)
    return outflow_of(s, simulate(s, base))


def fitness_delay(ch: Chromosome, scenario: Scenario, base=None) -> float:
    s = decode(ch, scenario)
    return delay_of(s, simulate(s, base))


_FITNESS: dict[str, Callable] = {"outflow": outflow_of, "delay": delay_of}


def tournament_select(population: Sequence, fitnesses: Sequence[float], k: int,
                      rng: np.random.Generator, maximize: bool = True):
    """Best of ``k`` individuals drawn uniformly without replacement; ties go to the first drawn."""
    if k < 1:
        raise ConfigError("tournament size must be at least 1")
    idx = rng.choice(len(population), size=min(k, len(population)), replace=False)
    fit = np.asarray(fitnesses, float)[idx]
    pick = idx[int(np.argmax(fit) if maximize else np.argmin(fit))]
    return population[pick]


def one_point_crossover(a: Chromosome, b: Chromosome, rng: np.random.Generator,
                        cut: Optional[int] = None) -> tuple[Chromosome, Chromosome]:
    """Swap gene suffixes after a cut drawn uniformly from ``[1, len - 1]``."""
    if (a.n_moving, a.n_signals) != (b.n_moving, b.n_signals):
        raise ConfigError("parents have different chromosome layouts")
    n = len(a)
    if n < 2:
        return a, b
    if cut is None:
        cut = int(rng.integers(1, n))
    if not 1 <= cut <= n - 1:
        raise ConfigError(f"cut {cut} outside [1, {n - 1}]")
    c1 = a.genes[:cut] + b.genes[cut:]
    c2 = b.genes[:cut] + a.genes[cut:]
    return (Chromosome(c1, a.n_moving, a.n_signals), Chromosome(c2, a.n_moving, a.n_signals))


def repair(ch: Chromosome, bounds: np.ndarray) -> Chromosome:
    """Clamp every gene into its bounds."""
    genes = np.clip(np.asarray(ch.genes, float), bounds[:, 0], bounds[:, 1])
    return Chromosome(tuple(float(g) for g in genes), ch.n_moving, ch.n_signals)


def mutate(ch: Chromosome, p_mutation: float, bounds: np.ndarray,
           rng: np.random.Generator) -> Chromosome:
    """Resample each gene uniformly within its bounds with probability ``p_mutation``."""
    if not 0.0 <= p_mutation <= 1.0:
        raise ConfigError("mutation probability must lie in [0, 1]")
    genes = np.asarray(ch.genes, float).copy()
    hit = rng.random(len(genes)) < p_mutation
    fresh = rng.uniform(bounds[:, 0], bounds[:, 1])
    genes[hit] = fresh[hit]
    return repair(Chromosome(tuple(float(g) for g in genes), ch.n_moving, ch.n_signals), bounds)


def random_chromosome(bounds: np.ndarray, n_moving: int, n_signals: int,
                      rng: np.random.Generator) -> Chromosome:
    genes = rng.uniform(bounds[:, 0], bounds[:, 1])
    return Chromosome(tuple(float(g) for g in genes), n_moving, n_signals)


def _stream(seed: int, *key: int) -> np.random.Generator:
    # independent stream per (generation, slot) so evaluation order never matters
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _workers() -> int:
    raw = os.environ.get("SIM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"SIM_THREADS must be an integer, got {raw!r}") from None


class _Evaluator:
    """Memoized fitness; identical gene vectors are simulated once."""

    def __init__(self, scenario: Scenario, objective: str):
        if objective not in _FITNESS:
            raise ConfigError(f"unknown objective {objective!r}")
        self.scenario = scenario
        self.metric = _FITNESS[objective]
        self.base = scenario.base_solution()
        self.cache: dict[tuple, float] = {}
        self.misses = 0

    def _one(self, ch: Chromosome) -> float:
        s = decode(ch, self.scenario)
        return self.metric(s, simulate(s, self.base))

    def __call__(self, chromosomes: Sequence[Chromosome]) -> list[float]:
        todo = list(dict.fromkeys(ch.genes for ch in chromosomes if ch.genes not in self.cache))
        lookup = {ch.genes: ch for ch in chromosomes}
        workers = min(_workers(), len(todo))
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                values = list(pool.map(lambda g: self._one(lookup[g]), todo))
        else:
            values = [self._one(lookup[g]) for g in todo]
        self.cache.update(zip(todo, values))
        self.misses += len(todo)
        return [self.cache[ch.genes] for ch in chromosomes]


def run_ga(cfg: GAConfig, scenario: Scenario, objective: Objective = "outflow",
           callback: Optional[Callable[[int, float, float], None]] = None) -> FitnessReport:
    """Generational GA with elitism; the identity chromosome is always in the first population."""
    start = time.perf_counter()
    m, s = len(scenario.moving), len(scenario.signals)
    if m + 2 * s == 0:
        raise ConfigError("scenario has no decision variables")
    maximize = objective == "outflow"
    bounds = cfg.bounds(m, s)
    evaluate = _Evaluator(scenario, objective)

    rng = _stream(cfg.seed, 0, 0)
    population = [Chromosome.identity(m, s)]
    population += [random_chromosome(bounds, m, s, rng) for _ in range(cfg.population - 1)]

    best_hist, mean_hist = [], []
    baseline = None
    for gen in range(cfg.generations + 1):
        fit = evaluate(population)
        if baseline is None:
            baseline = fit[0]
        arr = np.asarray(fit)
        best_hist.append(float(arr.max() if maximize else arr.min()))
        mean_hist.append(float(arr.mean()))
        if callback is not None:
            callback(gen, best_hist[-1], mean_hist[-1])
        if gen == cfg.generations:
            break
        # stable sort keeps the earliest individual first among equals
        order = np.argsort(-arr if maximize else arr, kind="stable")
        children = [population[i] for i in order[: cfg.elitism]]
        slot = 0
        while len(children) < cfg.population:
            r = _stream(cfg.seed, gen + 1, slot)
            slot += 1
            pa = tournament_select(population, fit, cfg.tournament, r, maximize)
            pb = tournament_select(population, fit, cfg.tournament, r, maximize)
            for child in one_point_crossover(pa, pb, r):
                if len(children) < cfg.population:
                    children.append(mutate(child, cfg.p_mutation, bounds, r))
        population = children

    fit = evaluate(population)
    arr = np.asarray(fit)
    i_best = int(np.argmax(arr) if maximize else np.argmin(arr))
    return FitnessReport(
        objective=objective,
        best=best_hist,
        mean=mean_hist,
        best_chromosome=population[i_best],
        best_fitness=float(arr[i_best]),
        baseline=float(baseline),
        wall_time=time.perf_counter() - start,
        evaluations=evaluate.misses,
    )
