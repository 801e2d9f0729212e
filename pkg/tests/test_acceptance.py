"""End-to-end acceptance checks, one test per criterion, each printing a verdict line."""

import itertools
import json
import os
import shutil
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import rankdata

from lifeplan import cli
from lifeplan.baselines import get_strategy
from lifeplan.bench.experiment import execute_run
from lifeplan.core import Episode, KnowledgeBase, Measurement
from lifeplan.distill import SEEDED, WeightedCandidate, distill, local_stage, pair_similarity
from lifeplan.oracle import load_dataset, write_dataset
from lifeplan.planner import PlannerParams, derive_rng, evolve_episode, lifelong_run, random_init
from lifeplan.stats import (
    SampleSet,
    a12,
    non_trivial,
    pairwise_outcome,
    scott_knott,
    sk_ranks,
    speedup,
    wilcoxon_rank_sum,
)
from lifeplan.synthetic import random_twin, rugged_twin

from util import MIN, episode, kb_of, random_episode_pair, ranked_episode

# one declared surface for the end-to-end criteria
TWIN_SEED = 2
RUNS = 30
LRZIP_ENV = "LIFEPLAN_LRZIP_DESCRIPTOR"


def brute_similarity(pairs):
    n = len(pairs)
    mis = sum((pairs[j][0] < pairs[k][0]) != (pairs[j][1] < pairs[k][1])
              for j, k in itertools.permutations(range(n), 2))
    return 1 - Fraction(mis, 2) / Fraction(n * (n - 1), 2)


def test_similarity_oracle(criterion):
    rng = np.random.default_rng(2024)
    cases = [random_episode_pair(rng, int(rng.integers(2, 9)), ties=bool(k % 2)) for k in range(500)]
    start = time.perf_counter()
    got = [pair_similarity(a, b, 0.3, rng) for a, b in cases]
    elapsed = time.perf_counter() - start
    mismatches = 0
    for (a, b), (s, fallback, n) in zip(cases, got):
        pairs = [(m.performance, b.evaluated[c].performance) for c, m in a.evaluated.items()
                 if c in b.evaluated]
        mismatches += fallback or n != len(pairs) or s != float(brute_similarity(pairs))
    ok = mismatches == 0 and elapsed < 1.0
    criterion(1, ok, f"500 pairs, {mismatches} mismatches, {elapsed:.3f}s")
    assert ok


def test_weight_formula(criterion):
    start = time.perf_counter()
    bad = 0
    checked = 0
    for h in range(1, 11):
        for o in range(1, h + 1):
            for s in range(1, h + 1):
                c = WeightedCandidate((0,), o, s, h)
                wr, wt = Fraction(o, h), Fraction(s, h)
                bad += (c.w_r, c.w_t, c.w) != (float(wr), float(wt), float(wr + wt))
                bad += not 0 < c.w <= 2
                if o < h:
                    bad += not WeightedCandidate((0,), o + 1, s, h).w > c.w
                if s < h:
                    bad += not WeightedCandidate((0,), o, s + 1, h).w > c.w
                checked += 1
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 1.0
    criterion(2, ok, f"{checked} (O,S,H) triples, {bad} violations, {elapsed:.3f}s")
    assert ok


def pad_from(start):
    counter = itertools.count(start)
    return lambda k, exclude: [(next(counter),) for _ in range(k)]


def test_seeding_branches(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    checks = {}

    res = distill(kb_of(), 0.3, 20, rng, MIN, pad_from(10_000))
    checks["empty kb"] = res.n_seeded == 0 and len(res.configs) == 20

    ok_single = True
    for size in (3, 10, 25, 80):
        ep = ranked_episode([(i,) for i in range(size)])
        res = distill(kb_of(ep), 0.3, 20, rng, MIN, pad_from(10_000))
        ok_single &= res.n_seeded == min(size, 10) and len(res.configs) == 20
        ok_single &= res.configs[:res.n_seeded] == [(i,) for i in range(min(size, 10))]
    checks["one past episode"] = ok_single

    up = episode({(i,): i for i in range(12)})
    down = episode({(i,): -i for i in range(12)})
    low = distill(kb_of(up, down), 0.3, 20, rng, MIN, pad_from(10_000))
    checks["S_ave < 0.3"] = low.report.average < 0.3 and low.n_seeded == 0

    ok_high = True
    for _ in range(50):
        eps = [ranked_episode([(int(i),) for i in rng.permutation(60)[:30]]) for _ in range(3)]
        # keep adjacent episodes concordant on their common configurations
        for ep in eps:
            for c, m in list(ep.evaluated.items()):
                ep.evaluated[c] = Measurement(c, "w", float(c[0]), True)
        kb = kb_of(*eps)
        res = distill(kb, 0.3, 20, rng, MIN, pad_from(10_000))
        pool = set(local_stage(kb, 20, MIN))
        seeded = {c for c, t in zip(res.configs, res.tags) if t == SEEDED}
        ok_high &= res.report.average >= 0.3 and bool(seeded) and seeded <= pool
    checks["S_ave >= 0.3"] = ok_high

    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 1.0
    failed = [k for k, v in checks.items() if not v]
    criterion(3, ok, f"{len(checks)} branches, failed={failed}, {elapsed:.3f}s")
    assert ok


def test_budget_and_elitism(criterion):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    violations = []
    exhausted = 0
    episodes = 0
    while episodes < 1000:
        twin = random_twin(rng)
        n = int(rng.choice([2, 4, 6, 10, 20]))
        params = PlannerParams(population_size=n)
        for w in twin.workloads:
            if episodes >= 1000:
                break
            prng = derive_rng(episodes)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                seeds = random_init(twin, w, n, prng)
            # duplicated seeds must not be charged twice
            seeds = seeds + seeds[: len(seeds) // 2]
            ep = evolve_episode(twin, w, seeds, params, prng)
            episodes += 1
            valid = [m for m in ep.evaluated.values() if m.valid]
            consumed = ep.trajectory[-1][0] if ep.trajectory else 0
            if len(valid) > 80 or consumed != len(valid):
                violations.append(("budget", episodes))
            vals = [v for _, v in ep.trajectory]
            if any(not twin.objective.better_or_equal(b, a) for a, b in zip(vals, vals[1:])):
                violations.append(("monotone", episodes))
            best_measured = twin.objective.best(m.performance for m in valid)
            if ep.best_performance != best_measured:
                violations.append(("elitism", episodes))
            if len(valid) == len(twin.valid_configs[w]):
                exhausted += 1
                if ep.best_performance != twin.optimum(w):
                    violations.append(("optimum", episodes))
    elapsed = time.perf_counter() - start
    ok = not violations and exhausted > 0 and elapsed < 30
    criterion(4, ok, f"{episodes} episodes, {exhausted} exhausted tables, "
                     f"{len(violations)} violations, {elapsed:.1f}s")
    assert ok, violations[:5]


def enumeration_p(pooled, n1):
    """p-value for every split of ``pooled`` at once, by listing all splits."""
    doubled = np.rint(rankdata(pooled) * 2).astype(int)
    n = len(pooled)
    splits = np.array(list(itertools.combinations(range(n), n1)))
    sums = doubled[splits].sum(axis=1)
    centre = n1 * (n + 1)
    dev = np.abs(sums - centre)
    return splits, (dev[None, :] >= dev[:, None]).mean(axis=1)


def test_statistics_oracles(criterion):
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    worst = 0.0
    splits_checked = 0
    for n1 in range(2, 7):
        for n2 in range(2, 7):
            pooled = rng.integers(0, 5, n1 + n2).astype(float)
            if np.all(pooled == pooled[0]):
                pooled[0] += 1
            splits, expected = enumeration_p(pooled, n1)
            for idx, p_ref in zip(splits, expected):
                mask = np.zeros(len(pooled), bool)
                mask[idx] = True
                p = wilcoxon_rank_sum(pooled[mask], pooled[~mask], method="exact")
                worst = max(worst, abs(p - p_ref))
                splits_checked += 1

    a12_bad = 0
    for _ in range(1000):
        a = rng.integers(0, 6, int(rng.integers(1, 15)))
        b = rng.integers(0, 6, int(rng.integers(1, 15)))
        ref = sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in a for y in b) / (len(a) * len(b))
        a12_bad += abs(a12(a, b) - ref) > 1e-12

    samples = [SampleSet("A", [1.0, 1.1, 0.9, 1.05, 0.95] * 4),
               SampleSet("B", [1.02, 1.12, 0.92, 1.0, 0.97] * 4),
               SampleSet("C", [3.0, 3.1, 2.9, 3.05, 2.95] * 4)]
    groups = [(set(g.labels), g.rank) for g in scott_knott(samples, MIN)]
    sk_ok = groups == [({"A", "B"}, 1), ({"C"}, 2)]

    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and a12_bad == 0 and sk_ok and elapsed < 10
    criterion(5, ok, f"{splits_checked} rank-sum splits (max |dp|={worst:.1e}), "
                     f"A12 mismatches={a12_bad}, SK groups={groups}, {elapsed:.1f}s")
    assert ok


def best_so_far_rows(records, positions):
    rows = []
    for rec in records:
        for ep in rec["episodes"]:
            if ep["position"] not in positions:
                continue
            points = dict((c, v) for c, v in ep["trajectory"])
            last, row = ep["trajectory"][0][1], []
            for c in range(1, rec["params"]["budget"] + 1):
                last = points.get(c, last)
                row.append(last)
            rows.append(row)
    return np.array(rows)


def finals_at(records, positions):
    return [ep["best_performance"] for rec in records for ep in rec["episodes"]
            if ep["position"] in positions]


def test_seeding_helps(criterion):
    start = time.perf_counter()
    twin = rugged_twin(3, "identical", seed=TWIN_SEED)
    params = PlannerParams()
    recs = {s: [execute_run(twin, s, r, params) for r in range(RUNS)] for s in ("DLISA", "FEMOSAA")}
    later = {2, 3}
    ours, theirs = finals_at(recs["DLISA"], later), finals_at(recs["FEMOSAA"], later)
    p = wilcoxon_rank_sum(ours, theirs)
    effect = a12(theirs, ours)
    s = speedup(best_so_far_rows(recs["FEMOSAA"], later), best_so_far_rows(recs["DLISA"], later),
                twin.objective)
    elapsed = time.perf_counter() - start
    ok = np.mean(ours) < np.mean(theirs) and p < 0.05 and effect >= 0.56 and s is not None and s > 1 \
        and elapsed < 60
    criterion(6, ok, f"mean {np.mean(ours):.4f} vs {np.mean(theirs):.4f}, p={p:.4f}, "
                     f"A12={effect:.3f}, s={s}, {elapsed:.1f}s")
    assert ok


def test_seeding_does_no_harm(criterion):
    start = time.perf_counter()
    twin = rugged_twin(3, "reversed", seed=TWIN_SEED)
    params = PlannerParams()
    # consecutive workloads alternate between a surface and its rank reversal
    order = twin.workloads
    recs = {s: [lifelong_run(twin, order, params, get_strategy(s), derive_rng(params.master_seed, r, 1))
                for r in range(RUNS)] for s in ("DLISA", "FEMOSAA")}
    averages = [sd.report.average for rec in recs["DLISA"] for sd in rec.seedings
                if sd.report is not None and sd.report.average is not None]
    fired = [sd.triggered for rec in recs["DLISA"] for sd in rec.seedings
             if sd.report is not None and sd.report.average is not None]
    degraded = []
    for i, w in enumerate(order):
        ours = [rec.episodes[i].best_performance for rec in recs["DLISA"]]
        theirs = [rec.episodes[i].best_performance for rec in recs["FEMOSAA"]]
        p, effect = wilcoxon_rank_sum(ours, theirs), a12(theirs, ours)
        if p < 0.05 and non_trivial(effect) and effect < 0.5:
            degraded.append((w, round(p, 4), round(effect, 3)))
    elapsed = time.perf_counter() - start
    ok = averages and max(averages) < 0.3 and not any(fired) and not degraded and elapsed < 60
    criterion(7, ok, f"{len(averages)} S_ave values, max={max(averages):.3f}, fired={sum(fired)}, "
                     f"degraded={degraded}, {elapsed:.1f}s")
    assert ok


def test_ablation_direction(criterion):
    start = time.perf_counter()
    twin = rugged_twin(5, "identical", seed=TWIN_SEED)
    params = PlannerParams()
    names = ("DLISA", "DLISA_I", "DLISA_II")
    recs = {s: [execute_run(twin, s, r, params) for r in range(RUNS)] for s in names}
    later = {2, 3, 4, 5}
    ours = finals_at(recs["DLISA"], later)
    detail, ok = [], True
    for v in names[1:]:
        theirs = finals_at(recs[v], later)
        mean_ok = np.mean(ours) <= np.mean(theirs)
        losses = []
        for w in twin.workloads:
            mine = [ep["best_performance"] for rec in recs["DLISA"] for ep in rec["episodes"]
                    if ep["workload"] == w]
            other = [ep["best_performance"] for rec in recs[v] for ep in rec["episodes"]
                     if ep["workload"] == w]
            if pairwise_outcome(mine, other, twin.objective) == "-":
                losses.append(w)
        pooled = pairwise_outcome(ours, theirs, twin.objective)
        ok &= mean_ok and not losses and pooled != "-"
        detail.append(f"{v}: {np.mean(ours):.4f} vs {np.mean(theirs):.4f} ({pooled}, losses={losses})")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    criterion(8, ok, "; ".join(detail) + f", {elapsed:.1f}s")
    assert ok


def test_determinism(criterion, tmp_path):
    start = time.perf_counter()
    twin = rugged_twin(3, "identical", seed=TWIN_SEED)
    write_dataset(twin, tmp_path / "system.json", tmp_path / "measurements.csv")
    config = tmp_path / "exp.json"
    config.write_text(json.dumps({
        "dataset": {"descriptor": "system.json"},
        "strategies": ["DLISA", "FEMOSAA", "SEED_EA", "D_SOGA", "DLISA_I", "DLISA_II"],
        "runs": 5, "output_dir": "out",
    }))
    records = tmp_path / "out" / "records"
    assert cli.main(["run", str(config)]) == 0
    first = {p.name: p.read_bytes() for p in sorted(records.glob("*.json"))}
    shutil.rmtree(tmp_path / "out")
    assert cli.main(["run", str(config), "--jobs", "2"]) == 0
    second = {p.name: p.read_bytes() for p in sorted(records.glob("*.json"))}
    elapsed = time.perf_counter() - start
    ok = len(first) == 30 and first == second and elapsed < 30
    criterion(9, ok, f"{len(first)} records byte-identical={first == second}, {elapsed:.1f}s")
    assert ok


@pytest.mark.skipif(not os.environ.get(LRZIP_ENV), reason=f"set {LRZIP_ENV} to the LRZIP descriptor")
def test_dataset_direction(criterion):
    start = time.perf_counter()
    twin = load_dataset(os.environ[LRZIP_ENV])
    params = PlannerParams()
    names = ("DLISA", "FEMOSAA", "SEED_EA", "D_SOGA")
    records = [execute_run(twin, s, r, params) for s in names for r in range(20)]
    rank1 = dict.fromkeys(names, 0)
    for w in twin.workloads:
        samples = [SampleSet(s, [ep["best_performance"] for rec in records if rec["strategy"] == s
                                 for ep in rec["episodes"] if ep["workload"] == w]) for s in names]
        for label, rank in sk_ranks(samples, twin.objective).items():
            rank1[label] += rank == 1
    elapsed = time.perf_counter() - start
    ok = all(rank1["DLISA"] >= rank1[s] for s in names[1:])
    criterion(10, ok, f"rank-1 counts {rank1} over {len(twin.workloads)} workloads, {elapsed:.0f}s",
              status=None if ok else "WARN")
    if not ok:
        # stochastic and dataset-bound: flag for inspection rather than failing the suite
        pytest.xfail(f"rank-1 direction not reproduced: {rank1}")


def test_dataset_direction_skipped_line(criterion):
    if os.environ.get(LRZIP_ENV):
        pytest.skip("dataset run active")
    criterion(10, True, f"skipped: {LRZIP_ENV} not set (no dataset downloading)", status="SKIP")
