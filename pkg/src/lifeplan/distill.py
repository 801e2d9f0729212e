"""Knowledge distillation: decide whether past workloads are similar enough to
seed from, and which past configurations to seed.

Seeding is triggered by the average ranked similarity of adjacent past
workloads; the seeds are drawn from each past workload's best half
population, weighted by how often (robustness) and how recently
(timeliness) each configuration was preserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Configuration, Episode, KnowledgeBase, PerformanceObjective

SEEDED = "seeded"
RANDOM = "random"

# pad(count, exclude) -> up to ``count`` fresh configurations not in ``exclude``
PadFn = Callable[[int, Sequence[Configuration]], list]


@dataclass(frozen=True)
class PairSimilarity:
    t: int
    t_next: int
    similarity: float
    common_count: int
    fallback_used: bool


@dataclass
class SimilarityReport:
    pairwise: list[PairSimilarity] = field(default_factory=list)
    average: float | None = None
    triggered: bool = False

    def to_dict(self) -> dict:
        return {
            "pairwise": [
                {"t": p.t, "t_next": p.t_next, "similarity": p.similarity,
                 "common_count": p.common_count, "fallback_used": p.fallback_used}
                for p in self.pairwise
            ],
            "average": self.average,
            "triggered": self.triggered,
        }


@dataclass(frozen=True)
class WeightedCandidate:
    config: Configuration
    occurrences: int
    latest: int
    history: int

    @property
    def w_r(self) -> float:
        return self.occurrences / self.history

    @property
    def w_t(self) -> float:
        return self.latest / self.history

    @property
    def w(self) -> float:
        # one division keeps the sum correctly rounded
        return (self.occurrences + self.latest) / self.history


@dataclass
class SeedResult:
    """Initial population for an episode, with per-member provenance."""

    configs: list[Configuration]
    tags: list[str]
    report: SimilarityReport | None = None
    triggered: bool = False

    @property
    def n_seeded(self) -> int:
        return self.tags.count(SEEDED)


# --------------------------------------------------------------------------
# when to seed

def common_configs(d_a: Episode, d_b: Episode) -> list[tuple[Configuration, float, float]]:
    other = d_b.evaluated
    return [
        (c, m.performance, other[c].performance)
        for c, m in d_a.evaluated.items()
        if c in other
    ]


def ranking_loss(pairs: Sequence[tuple[float, float]]) -> float:
    """Number of configuration pairs whose order differs between two workloads.

    Counts the exclusive-or of strict ``<`` over ordered pairs and halves it,
    so a pair misranked on both orientations counts once. A pair tied on one
    side only contributes 0.5, independent of listing order.
    """
    if len(pairs) < 2:
        return 0.0
    arr = np.asarray(pairs, dtype=float)
    a, b = arr[:, 0], arr[:, 1]
    mis = (a[:, None] < a[None, :]) ^ (b[:, None] < b[None, :])
    return int(mis.sum()) / 2


def pair_similarity(d_a: Episode, d_b: Episode, alpha: float,
                    rng: np.random.Generator) -> tuple[float, bool, int]:
    """Similarity in [0, 1] plus (fallback_used, common_count).

    With fewer than two common configurations there is no ranking evidence
    and a random value below ``alpha`` stands in.
    """
    common = common_configs(d_a, d_b)
    n = len(common)
    if n < 2:
        return float(rng.uniform(0.0, alpha)), True, n
    loss = ranking_loss([(pa, pb) for _, pa, pb in common])
    # 1 - L / C(n, 2) as one integer ratio, so the result is correctly rounded
    both = n * (n - 1)
    return (both - int(2 * loss)) / both, False, n


def average_similarity(kb: KnowledgeBase, alpha: float,
                       rng: np.random.Generator) -> SimilarityReport:
    eps = kb.episodes
    report = SimilarityReport()
    if not eps:
        return report
    if len(eps) == 1:
        # no adjacent pair; the single-history branch seeds half the population
        report.triggered = True
        return report
    for t in range(len(eps) - 1):
        s, fallback, n = pair_similarity(eps[t], eps[t + 1], alpha, rng)
        report.pairwise.append(PairSimilarity(t + 1, t + 2, s, n, fallback))
    report.average = sum(p.similarity for p in report.pairwise) / len(report.pairwise)
    report.triggered = report.average >= alpha
    return report


# --------------------------------------------------------------------------
# what to seed

def preserved_sets(kb: KnowledgeBase, n: int, objective: PerformanceObjective,
                   preserved: str = "top") -> list[set]:
    """Per past episode, the configurations counted as preserved there."""
    if preserved == "top":
        return [set(ep.ranked_valid(objective)[: n // 2]) for ep in kb.episodes]
    if preserved == "evaluated":
        return [set(ep.evaluated) for ep in kb.episodes]
    raise ValueError(f"unknown preserved-set mode {preserved!r}")


def local_stage(kb: KnowledgeBase, n: int, objective: PerformanceObjective) -> list[Configuration]:
    """Union of each past episode's best ``n // 2`` valid configurations."""
    pool: dict[Configuration, None] = {}
    for ep in kb.episodes:
        for c in ep.ranked_valid(objective)[: n // 2]:
            pool.setdefault(c, None)
    return list(pool)


def quality_weights(pool: Sequence[Configuration], kb: KnowledgeBase, n: int,
                    objective: PerformanceObjective,
                    preserved: str = "top") -> list[WeightedCandidate]:
    history = kb.size
    if history < 1:
        raise ValueError("quality weights need at least one past episode")
    sets = preserved_sets(kb, n, objective, preserved)
    out = []
    for c in pool:
        hits = [i + 1 for i, s in enumerate(sets) if c in s]
        if not hits:
            raise ValueError(f"configuration {c!r} was never preserved")
        out.append(WeightedCandidate(c, len(hits), hits[-1], history))
    return out


def weighted_sample(candidates: Sequence, weights: Sequence[float], n: int,
                    rng: np.random.Generator) -> list:
    """Draw ``n`` items without replacement, each draw proportional to the
    remaining weights. With ``n`` or fewer candidates all are returned."""
    if len(candidates) <= n:
        return list(candidates)
    w = np.array(weights, dtype=float)
    chosen = []
    for _ in range(n):
        cum = np.cumsum(w)
        total = cum[-1]
        if total <= 0:
            # only zero-weight items remain: fall back to uniform over them
            rest = [i for i in range(len(w)) if i not in chosen]
            idx = rest[int(rng.integers(len(rest)))]
        else:
            idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
            idx = min(idx, len(w) - 1)
            while w[idx] == 0:
                idx -= 1
        chosen.append(idx)
        w[idx] = 0.0
    return [candidates[i] for i in chosen]


def seed_from_knowledge(kb: KnowledgeBase, n: int, rng: np.random.Generator,
                        objective: PerformanceObjective, *, preserved: str = "top",
                        weighting: str = "quality") -> list[Configuration]:
    """The triggered branch: local-stage filtering then weighted selection."""
    pool = local_stage(kb, n, objective)
    if not pool:
        return []
    if weighting == "quality":
        weights = [c.w for c in quality_weights(pool, kb, n, objective, preserved)]
    elif weighting == "uniform":
        weights = [1.0] * len(pool)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    return weighted_sample(pool, weights, n, rng)


def _padded(seeds: list, n: int, pad: PadFn) -> tuple[list, list[str]]:
    configs = list(seeds)
    tags = [SEEDED] * len(configs)
    if len(configs) < n:
        extra = pad(n - len(configs), configs)
        configs += extra
        tags += [RANDOM] * len(extra)
    return configs, tags


def distill(kb: KnowledgeBase, alpha: float, n: int, rng: np.random.Generator,
            objective: PerformanceObjective, pad: PadFn, *, preserved: str = "top",
            weighting: str = "quality") -> SeedResult:
    if n % 2:
        raise ValueError("population size must be even")
    report = average_similarity(kb, alpha, rng)
    seeds = []
    if report.triggered:
        seeds = seed_from_knowledge(kb, n, rng, objective, preserved=preserved,
                                    weighting=weighting)
    configs, tags = _padded(seeds, n, pad)
    return SeedResult(configs, tags, report, report.triggered)
