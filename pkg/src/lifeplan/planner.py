"""Elitist genetic planning per workload and the lifelong adaptation loop."""

from __future__ import annotations

import logging
import random
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    ConfigSpace,
    Configuration,
    Episode,
    KnowledgeBase,
    Measurement,
    OptionKind,
    PerformanceObjective,
    WorkloadId,
)
from .distill import SeedResult
from .oracle import BudgetExhausted, BudgetMeter, CyberTwin, measure

log = logging.getLogger(__name__)


@dataclass
class PlannerParams:
    population_size: int = 20
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    budget: int = 80
    alpha: float = 0.3
    master_seed: int = 0
    # whether off-table configurations are charged against the budget
    charge_invalid: bool = False
    # "top" (best half per episode) or "evaluated" when counting preservations
    preserved: str = "top"
    # D-SOGA retention pool: "elite" or "evaluated"
    dsoga_pool: str = "elite"
    dlisa_ii_trigger_prob: float = 0.5
    # generations without a new budgeted measurement before giving up
    max_stall_generations: int = 50

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be an even number >= 2")
        if self.budget < 1:
            raise ValueError("budget must be positive")
        for name in ("crossover_rate", "mutation_rate", "alpha", "dlisa_ii_trigger_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.preserved not in ("top", "evaluated"):
            raise ValueError(f"unknown preserved mode {self.preserved!r}")
        if self.dsoga_pool not in ("elite", "evaluated"):
            raise ValueError(f"unknown dsoga_pool {self.dsoga_pool!r}")

    def to_dict(self) -> dict:
        return asdict(self)


# (kb, params, twin, workload, rng) -> SeedResult
SeedingStrategy = Callable[[KnowledgeBase, PlannerParams, CyberTwin, WorkloadId, np.random.Generator],
                           SeedResult]


def derive_rng(*keys: int) -> np.random.Generator:
    """Independent, reproducible stream for a tuple of integer keys."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in keys])))


# --------------------------------------------------------------------------
# operators

def random_init(twin: CyberTwin, workload: WorkloadId, n: int, rng: np.random.Generator,
                exclude: Sequence[Configuration] = ()) -> list[Configuration]:
    """``n`` distinct table configurations for ``workload``, none in ``exclude``."""
    excluded = set(exclude)
    pool = [c for c in twin.valid_configs[workload] if c not in excluded]
    if len(pool) < n:
        warnings.warn(
            f"only {len(pool)} unused configurations available for {workload!r}, wanted {n}",
            stacklevel=2,
        )
        n = len(pool)
    if n == 0:
        return []
    idx = rng.choice(len(pool), size=n, replace=False)
    return [pool[i] for i in idx]


def binary_tournament(population: Sequence[tuple[Configuration, float]],
                      objective: PerformanceObjective, rng) -> Configuration:
    """Better of two members drawn with replacement; exact ties by coin flip.

    ``rng`` only needs a scalar ``random()`` method (numpy or stdlib).
    """
    n = len(population)
    i, j = int(rng.random() * n), int(rng.random() * n)
    fi, fj = population[i][1], population[j][1]
    if fi == fj:
        return population[i if rng.random() < 0.5 else j][0]
    if objective.minimize:
        return population[i if fi < fj else j][0]
    return population[i if fi > fj else j][0]


def single_point_crossover(a: Configuration, b: Configuration, rate: float,
                           rng) -> tuple[Configuration, Configuration]:
    n = len(a)
    if rng.random() >= rate or n < 2:
        return tuple(a), tuple(b)
    k = 1 + int(rng.random() * (n - 1))
    return tuple(a[:k]) + tuple(b[k:]), tuple(b[:k]) + tuple(a[k:])


def boundary_mutation(config: Configuration, space: ConfigSpace, rate: float,
                      rng) -> Configuration:
    """Integer genes jump to a domain bound; categorical genes are redrawn."""
    out = None
    for i, opt in enumerate(space.options):
        if rng.random() >= rate:
            continue
        if out is None:
            out = list(config)
        if opt.kind is OptionKind.INTEGER:
            out[i] = opt.minimum if rng.random() < 0.5 else opt.maximum
        else:
            out[i] = opt.domain[int(rng.random() * len(opt.domain))]
    return config if out is None else tuple(out)


# --------------------------------------------------------------------------
# one planning episode

class _EpisodeRun:
    """Bookkeeping shared by the seed and generation phases of an episode."""

    def __init__(self, twin: CyberTwin, workload: WorkloadId, params: PlannerParams):
        self.twin = twin
        self.workload = workload
        self.objective = twin.objective
        self.meter = BudgetMeter(params.budget, params.charge_invalid)
        self.episode = Episode(workload)
        self.universe = len(twin.valid_configs[workload])
        self.n_valid = 0
        self.best: float | None = None
        self.exhausted = False

    def measure_all(self, configs: Sequence[Configuration]) -> list[Measurement]:
        out = []
        for c in configs:
            before = self.meter.consumed
            try:
                m = measure(self.twin, self.workload, c, self.meter)
            except BudgetExhausted:
                self.exhausted = True
                break
            if c not in self.episode.evaluated:
                self.episode.evaluated[c] = m
                if m.valid:
                    self.n_valid += 1
                    if self.best is None or self.objective.sort_key(m.performance) < \
                            self.objective.sort_key(self.best):
                        self.best = m.performance
            if self.meter.consumed > before:
                shown = self.best if self.best is not None else m.performance
                self.episode.trajectory.append((self.meter.consumed, shown))
            out.append(m)
        if self.meter.exhausted:
            self.exhausted = True
        return out

    @property
    def done(self) -> bool:
        return self.exhausted or self.n_valid >= self.universe


def _survivors(pool: Sequence[Measurement], n: int, objective: PerformanceObjective) -> list[Measurement]:
    """Best ``n`` of the merged pool, distinct configurations first."""
    ranked = sorted(pool, key=lambda m: objective.sort_key(m.performance))
    seen = set()
    distinct, dupes = [], []
    for m in ranked:
        (dupes if m.config in seen else distinct).append(m)
        seen.add(m.config)
    return (distinct + dupes)[:n]


def evolve_episode(twin: CyberTwin, workload: WorkloadId, seeds: Sequence[Configuration],
                   params: PlannerParams, rng: np.random.Generator) -> Episode:
    objective = twin.objective
    space = twin.space
    n = params.population_size
    run = _EpisodeRun(twin, workload, params)
    # scalar draws are far cheaper from the stdlib generator; seed it from the run stream
    ga_rng = random.Random(int(rng.integers(2**63)))

    population = _survivors(run.measure_all(seeds), n, objective)
    stall = 0
    while population and not run.done and stall < params.max_stall_generations:
        scored = [(m.config, m.performance) for m in population]
        offspring: list[Configuration] = []
        while len(offspring) < n:
            p1 = binary_tournament(scored, objective, ga_rng)
            p2 = binary_tournament(scored, objective, ga_rng)
            c1, c2 = single_point_crossover(p1, p2, params.crossover_rate, ga_rng)
            offspring.append(boundary_mutation(c1, space, params.mutation_rate, ga_rng))
            offspring.append(boundary_mutation(c2, space, params.mutation_rate, ga_rng))
        before = run.meter.consumed
        measured = run.measure_all(offspring[:n])
        population = _survivors(population + measured, n, objective)
        stall = stall + 1 if run.meter.consumed == before else 0
    if stall >= params.max_stall_generations:
        log.debug("episode %s stalled after %d measurements", workload, run.meter.consumed)

    ep = run.episode
    ranked = ep.ranked_valid(objective)
    ep.elite = ranked[:n]
    ep.best = ranked[0] if ranked else None
    return ep


# --------------------------------------------------------------------------
# lifelong loop

@dataclass
class RunRecord:
    run_id: int
    strategy: str
    workload_order: list[WorkloadId]
    params: PlannerParams
    episodes: list[Episode] = field(default_factory=list)
    seedings: list[SeedResult] = field(default_factory=list)

    def to_dict(self, space: ConfigSpace) -> dict:
        """JSON-ready record; configurations are written as value lists."""
        eps = []
        for pos, (ep, seed) in enumerate(zip(self.episodes, self.seedings), start=1):
            n_invalid = sum(1 for m in ep.evaluated.values() if not m.valid)
            eps.append({
                "position": pos,
                "workload": ep.workload,
                "best_config": list(ep.best) if ep.best is not None else None,
                "best_performance": ep.best_performance,
                "measurements": ep.trajectory[-1][0] if ep.trajectory else 0,
                "evaluated": len(ep.evaluated),
                "invalid": n_invalid,
                "trajectory": [[c, v] for c, v in ep.trajectory],
                "elite": [list(c) for c in ep.elite],
                "initial_population": [list(c) for c in seed.configs],
                "seed_provenance": list(seed.tags),
                "triggered": seed.triggered,
                "similarity": seed.report.to_dict() if seed.report is not None else None,
            })
        return {
            "run_id": self.run_id,
            "strategy": self.strategy,
            "objective": {"direction": space.objective.direction.value,
                          "metric": space.objective.metric_name},
            "params": self.params.to_dict(),
            "workload_order": list(self.workload_order),
            "episodes": eps,
        }


def lifelong_run(twin: CyberTwin, workload_order: Sequence[WorkloadId], params: PlannerParams,
                 strategy: SeedingStrategy, rng: np.random.Generator, *,
                 run_id: int = 0, strategy_name: str = "") -> RunRecord:
    if sorted(workload_order) != sorted(twin.workloads):
        raise ValueError("workload order must be a permutation of the twin's workloads")
    kb = KnowledgeBase()
    record = RunRecord(run_id, strategy_name or getattr(strategy, "__name__", "strategy"),
                       list(workload_order), params)
    for workload in workload_order:
        seeding = strategy(kb, params, twin, workload, rng)
        episode = evolve_episode(twin, workload, seeding.configs, params, rng)
        kb.add(episode)
        record.episodes.append(episode)
        record.seedings.append(seeding)
        log.debug("workload %s adapted to %r (%s)", workload, episode.best,
                  episode.best_performance)
    return record
