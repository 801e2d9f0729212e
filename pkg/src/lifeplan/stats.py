"""Nonparametric comparison of result samples: rank-sum test, Vargha-Delaney
effect size, Scott-Knott ranking, and the measurement speedup ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import chi2, rankdata

from .core import ContractError, PerformanceObjective

SIGNIFICANCE = 0.05
A12_LOW, A12_HIGH = 0.44, 0.56
EXACT_BELOW = 8


@dataclass(frozen=True)
class SampleSet:
    label: str
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True)
class SKGroup:
    labels: tuple
    rank: int


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float
    n: int
    std_defined: bool = True


def _values(x) -> np.ndarray:
    return np.asarray(x.values if isinstance(x, SampleSet) else x, dtype=float)


# --------------------------------------------------------------------------
# rank-sum test

def _exact_rank_sum_p(doubled_ranks: np.ndarray, n1: int, observed: int) -> float:
    """Two-sided p of the (doubled) rank sum of ``n1`` items drawn from the pool.

    The null distribution over all C(n, n1) subsets is built by dynamic
    programming on subset size and sum.
    """
    ranks = [int(r) for r in doubled_ranks]
    max_sum = sum(sorted(ranks)[-n1:])
    counts = np.zeros((n1 + 1, max_sum + 1))
    counts[0, 0] = 1.0
    for r in ranks:
        # iterate subset sizes downward so each item is used at most once
        for k in range(n1, 0, -1):
            counts[k, r:] += counts[k - 1, : max_sum + 1 - r]
    dist = counts[n1]
    n = len(ranks)
    centre = n1 * (n + 1)  # expected doubled rank sum
    dev = np.abs(np.arange(max_sum + 1) - centre)
    obs_dev = abs(observed - centre)
    p = dist[dev >= obs_dev].sum() / dist.sum()
    return float(min(1.0, p))


def _normal_rank_sum_p(ranks: np.ndarray, n1: int, n2: int) -> float:
    n = n1 + n2
    r1 = ranks[:n1].sum()
    u1 = r1 - n1 * (n1 + 1) / 2
    mu = n1 * n2 / 2
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(((counts ** 3) - counts).sum())
    var = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 1.0
    z = (abs(u1 - mu) - 0.5) / math.sqrt(var)
    if z <= 0:
        return 1.0
    return float(min(1.0, math.erfc(z / math.sqrt(2))))


def wilcoxon_rank_sum(a, b, method: str = "auto") -> float:
    """Two-sided rank-sum (Mann-Whitney) p-value with midranks for ties.

    ``method`` is "exact", "normal", or "auto" (exact unless both samples
    hold at least eight values).
    """
    x, y = _values(a), _values(b)
    n1, n2 = len(x), len(y)
    if n1 < 2 or n2 < 2:
        raise ContractError("rank-sum test needs at least two values per sample")
    pooled = np.concatenate([x, y])
    if np.all(pooled == pooled[0]):
        return 1.0
    ranks = rankdata(pooled)
    if method == "auto":
        method = "exact" if min(n1, n2) < EXACT_BELOW else "normal"
    if method == "exact":
        doubled = np.rint(ranks * 2).astype(int)
        return _exact_rank_sum_p(doubled, n1, int(doubled[:n1].sum()))
    if method == "normal":
        return _normal_rank_sum_p(ranks, n1, n2)
    raise ValueError(f"unknown method {method!r}")


# --------------------------------------------------------------------------
# effect size

def a12(a, b) -> float:
    """Probability that a value from ``a`` exceeds one from ``b`` (ties count half)."""
    x, y = _values(a), _values(b)
    if not len(x) or not len(y):
        raise ContractError("A12 needs non-empty samples")
    gt = (x[:, None] > y[None, :]).sum()
    eq = (x[:, None] == y[None, :]).sum()
    return float((gt + 0.5 * eq) / (len(x) * len(y)))


def non_trivial(effect: float) -> bool:
    return effect <= A12_LOW or effect >= A12_HIGH


def pairwise_outcome(ours, theirs, objective: PerformanceObjective) -> str:
    """'+' if ``ours`` is significantly better, '-' if worse, '=' otherwise."""
    p = wilcoxon_rank_sum(ours, theirs)
    effect = a12(ours, theirs)
    if p >= SIGNIFICANCE or not non_trivial(effect):
        return "="
    ours_larger = effect > 0.5
    return "+" if ours_larger != objective.minimize else "-"


# --------------------------------------------------------------------------
# Scott-Knott

SK_PERMUTATIONS = 199


def _best_split(groups: list[SampleSet]) -> tuple[int, float]:
    """Cut index of the mean-ordered list maximizing between-group SS."""
    sizes = np.array([len(g.values) for g in groups], dtype=float)
    sums = np.array([sum(g.values) for g in groups])
    return _max_delta(sizes, sums)


def _max_delta(sizes: np.ndarray, sums: np.ndarray) -> tuple[int, float]:
    # sizes/sums are per ordered group; works on stacked rows too
    n_l = np.cumsum(sizes, axis=-1)[..., :-1]
    s_l = np.cumsum(sums, axis=-1)[..., :-1]
    n_tot = sizes.sum(axis=-1, keepdims=True)
    s_tot = sums.sum(axis=-1, keepdims=True)
    grand = s_tot / n_tot
    n_r, s_r = n_tot - n_l, s_tot - s_l
    delta = n_l * (s_l / n_l - grand) ** 2 + n_r * (s_r / n_r - grand) ** 2
    if delta.ndim == 1:
        i = int(np.argmax(delta))
        return i + 1, float(delta[i])
    return None, delta.max(axis=-1)


def _permutation_split(groups: list[SampleSet], observed: float, seed: int = 0) -> bool:
    # null: labels exchangeable; refit ordering and cut on every relabelling
    values = np.concatenate([g.values for g in groups])
    sizes = np.array([len(g.values) for g in groups])
    labels = np.repeat(np.arange(len(groups)), sizes)
    rng = np.random.default_rng(seed)
    perms = np.argsort(rng.random((SK_PERMUTATIONS, len(values))), axis=1)
    shuffled = labels[perms]
    sums = np.stack([np.bincount(row, weights=values, minlength=len(groups)) for row in shuffled])
    means = sums / sizes
    order = np.argsort(means, axis=1)
    sizes_o = np.take_along_axis(np.broadcast_to(sizes, sums.shape).astype(float), order, axis=1)
    sums_o = np.take_along_axis(sums, order, axis=1)
    _, null = _max_delta(sizes_o, sums_o)
    # delta is invariant to ordering direction, so ascending sort suffices
    exceed = int((null >= observed * (1 - 1e-12)).sum())
    return (1 + exceed) / (1 + SK_PERMUTATIONS) < SIGNIFICANCE


def _split_accepted(groups, cut: int, delta: float, test: str) -> bool:
    left = np.concatenate([g.values for g in groups[:cut]])
    right = np.concatenate([g.values for g in groups[cut:]])
    if test == "effect":
        return non_trivial(a12(left, right))
    if test == "permutation":
        return non_trivial(a12(left, right)) and _permutation_split(groups, delta)
    if test == "chisq":
        return _chisq_split(groups, left, right)
    raise ValueError(f"unknown Scott-Knott test {test!r}")


def _chisq_split(groups, left, right) -> bool:
    # classical Scott & Knott criterion on the treatment means
    means = np.array([g.mean for g in groups])
    k = len(means)
    n_rep = np.mean([len(g.values) for g in groups])
    within = sum(((np.asarray(g.values) - g.mean) ** 2).sum() for g in groups)
    dof = sum(len(g.values) for g in groups) - k
    s2_mean = (within / dof) / n_rep if dof > 0 else 0.0
    b0 = len(left) / n_rep * (left.mean() - means.mean()) ** 2 + \
        len(right) / n_rep * (right.mean() - means.mean()) ** 2
    sigma2 = (((means - means.mean()) ** 2).sum() + dof * s2_mean) / (k + dof)
    if sigma2 <= 0:
        return b0 > 0
    lam = math.pi / (2 * (math.pi - 2)) * b0 / sigma2
    return chi2.sf(lam, k / (math.pi - 2)) < SIGNIFICANCE


def _sk_partition(groups: list[SampleSet], test: str) -> list[list[SampleSet]]:
    if len(groups) < 2:
        return [groups]
    cut, delta = _best_split(groups)
    if delta <= 0 or not _split_accepted(groups, cut, delta, test):
        return [groups]
    return _sk_partition(groups[:cut], test) + _sk_partition(groups[cut:], test)


def scott_knott(samples: Sequence[SampleSet], objective: PerformanceObjective,
                test: str = "permutation") -> list[SKGroup]:
    """Rank sample sets into statistically distinct groups, rank 1 best.

    Sets are ordered by mean; the ordered list is split where the
    between-group sum of squares peaks. The split is kept only if the two
    sides differ with a non-trivial A12 and the peak is significant against
    a label-permutation null that refits the split each time (``test=
    "permutation"``). ``"effect"`` applies the A12 gate alone; ``"chisq"``
    is the classical Scott & Knott criterion.
    """
    if not samples:
        raise ContractError("Scott-Knott needs at least one sample set")
    ordered = sorted(samples, key=lambda s: objective.sort_key(s.mean))
    parts = _sk_partition(list(ordered), test)
    return [SKGroup(tuple(s.label for s in part), rank) for rank, part in enumerate(parts, start=1)]


def sk_ranks(samples: Sequence[SampleSet], objective: PerformanceObjective,
             test: str = "permutation") -> dict[str, int]:
    return {label: g.rank for g in scott_knott(samples, objective, test) for label in g.labels}


# --------------------------------------------------------------------------
# efficiency and summaries

def speedup(baseline_runs, dlisa_runs, objective: PerformanceObjective) -> float | None:
    """Ratio b/m of measurements the baseline needs to reach its best mean
    best-so-far value T, over those the planner under test needs to match T.

    Both inputs are (runs x budget) best-so-far arrays. Returns None when
    T is never matched.
    """
    base = np.atleast_2d(np.asarray(baseline_runs, dtype=float))
    ours = np.atleast_2d(np.asarray(dlisa_runs, dtype=float))
    if base.shape[1] != ours.shape[1]:
        raise ContractError(
            f"trajectories cover different budgets: {base.shape[1]} vs {ours.shape[1]}"
        )
    base_mean = base.mean(axis=0)
    ours_mean = ours.mean(axis=0)
    target = objective.best(base_mean)
    b = int(np.flatnonzero(base_mean == target)[0]) + 1
    reached = ours_mean <= target if objective.minimize else ours_mean >= target
    hits = np.flatnonzero(reached)
    if not len(hits):
        return None
    return b / (int(hits[0]) + 1)


def summarize(samples: Sequence[SampleSet]) -> dict[str, Summary]:
    out = {}
    for s in samples:
        v = np.asarray(s.values, dtype=float)
        if len(v) < 2:
            out[s.label] = Summary(float(v.mean()) if len(v) else math.nan, 0.0, len(v), False)
        else:
            out[s.label] = Summary(float(v.mean()), float(v.std(ddof=1)), len(v))
    return out
