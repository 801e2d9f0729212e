"""Seeding policies: the distilled-knowledge planner, the compared baselines
and the two ablations. Each has the ``SeedingStrategy`` signature."""

from __future__ import annotations

import enum

import numpy as np

from .core import KnowledgeBase, WorkloadId
from .distill import RANDOM, SEEDED, SeedResult, distill, seed_from_knowledge
from .oracle import CyberTwin
from .planner import PlannerParams, SeedingStrategy, random_init


class StrategyId(str, enum.Enum):
    DLISA = "DLISA"
    FEMOSAA = "FEMOSAA"
    SEED_EA = "SEED_EA"
    D_SOGA = "D_SOGA"
    DLISA_I = "DLISA_I"
    DLISA_II = "DLISA_II"


def _pad(twin: CyberTwin, workload: WorkloadId, rng: np.random.Generator):
    def pad(count, exclude):
        return random_init(twin, workload, count, rng, exclude)
    return pad


def _with_padding(seeds, n, twin, workload, rng, **extra) -> SeedResult:
    seeds = list(dict.fromkeys(seeds))
    extra_configs = random_init(twin, workload, n - len(seeds), rng, seeds) if len(seeds) < n else []
    return SeedResult(seeds + extra_configs,
                      [SEEDED] * len(seeds) + [RANDOM] * len(extra_configs), **extra)


def dlisa_init(kb: KnowledgeBase, params: PlannerParams, twin: CyberTwin,
               workload: WorkloadId, rng: np.random.Generator) -> SeedResult:
    return distill(kb, params.alpha, params.population_size, rng, twin.objective,
                   _pad(twin, workload, rng), preserved=params.preserved)


def femosaa_init(kb, params, twin, workload, rng) -> SeedResult:
    """Restart from scratch: ignore the knowledge base entirely."""
    return _with_padding([], params.population_size, twin, workload, rng)


def seed_ea_init(kb, params, twin, workload, rng) -> SeedResult:
    """Carry over the most recent episode's final elite population."""
    seeds = kb.episodes[-1].elite[: params.population_size] if kb.size else []
    return _with_padding(seeds, params.population_size, twin, workload, rng,
                         triggered=bool(seeds))


def d_soga_init(kb, params, twin, workload, rng) -> SeedResult:
    """Keep a random 80% of the previous population, refill the rest randomly."""
    n = params.population_size
    if not kb.size:
        return _with_padding([], n, twin, workload, rng)
    prev = kb.episodes[-1]
    if params.dsoga_pool == "elite":
        pool = list(prev.elite)
    else:
        pool = prev.ranked_valid(twin.objective)
    keep = min(int(round(0.8 * n)), len(pool))
    idx = rng.choice(len(pool), size=keep, replace=False) if keep else []
    return _with_padding([pool[i] for i in idx], n, twin, workload, rng, triggered=True)


def dlisa_i_init(kb, params, twin, workload, rng) -> SeedResult:
    """Similarity trigger kept; seeds drawn uniformly from the local-stage pool."""
    return distill(kb, params.alpha, params.population_size, rng, twin.objective,
                   _pad(twin, workload, rng), preserved=params.preserved, weighting="uniform")


def dlisa_ii_init(kb, params, twin, workload, rng) -> SeedResult:
    """Similarity analysis replaced by a coin flip; weighted seeding kept."""
    n = params.population_size
    triggered = kb.size > 0 and rng.random() < params.dlisa_ii_trigger_prob
    seeds = []
    if triggered:
        seeds = seed_from_knowledge(kb, n, rng, twin.objective, preserved=params.preserved)
    return _with_padding(seeds, n, twin, workload, rng, triggered=triggered)


_REGISTRY: dict[str, SeedingStrategy] = {
    StrategyId.DLISA.value: dlisa_init,
    StrategyId.FEMOSAA.value: femosaa_init,
    StrategyId.SEED_EA.value: seed_ea_init,
    StrategyId.D_SOGA.value: d_soga_init,
    StrategyId.DLISA_I.value: dlisa_i_init,
    StrategyId.DLISA_II.value: dlisa_ii_init,
}


def register_strategy(name: str, fn: SeedingStrategy) -> None:
    """Make an external seeding policy available by name to the harness."""
    _REGISTRY[_normalize(name)] = fn


def _normalize(name: str) -> str:
    return name.strip().upper().replace("-", "_")


def get_strategy(name: str) -> SeedingStrategy:
    try:
        return _REGISTRY[_normalize(name)]
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; known: {sorted(_REGISTRY)}") from None


def strategy_names() -> list[str]:
    return list(_REGISTRY)


def canonical_name(name: str) -> str:
    get_strategy(name)
    return _normalize(name)

