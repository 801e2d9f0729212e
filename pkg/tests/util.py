"""Builders shared by the test modules."""

from __future__ import annotations

import itertools

import numpy as np

from lifeplan.core import (
    ConfigSpace,
    Episode,
    KnowledgeBase,
    Measurement,
    OptionDef,
    OptionKind,
    PerformanceObjective,
)
from lifeplan.oracle import CyberTwin

MIN = PerformanceObjective("minimize")
MAX = PerformanceObjective("maximize")


def grid_space(levels=(4, 3), objective=MIN) -> ConfigSpace:
    return ConfigSpace(
        [OptionDef(f"x{i}", OptionKind.INTEGER, range(n)) for i, n in enumerate(levels)],
        objective,
    )


def grid_twin(values_by_workload: dict, levels=(4, 3), objective=MIN, system="grid") -> CyberTwin:
    """Twin over a full integer grid; ``values_by_workload[w]`` is a flat
    array in itertools.product order, ``None`` entries are left off-table."""
    space = grid_space(levels, objective)
    universe = list(itertools.product(*(range(n) for n in levels)))
    table = {}
    for w, values in values_by_workload.items():
        for c, v in zip(universe, values):
            if v is not None:
                table[(c, w)] = float(v)
    return CyberTwin(space, list(values_by_workload), table, system=system)


def episode(perfs: dict, workload="w", invalid=()) -> Episode:
    """Episode whose evaluated map holds ``perfs`` (config -> value)."""
    ep = Episode(workload)
    for c, v in perfs.items():
        ep.evaluated[c] = Measurement(c, workload, float(v), c not in invalid)
    return ep


def ranked_episode(configs, objective=MIN, workload="w") -> Episode:
    """Valid episode where ``configs`` are listed best first."""
    n = len(configs)
    vals = range(n) if objective.minimize else range(n, 0, -1)
    return episode(dict(zip(configs, vals)), workload)


def kb_of(*episodes) -> KnowledgeBase:
    return KnowledgeBase(list(episodes))


def random_episode_pair(rng: np.random.Generator, n_common: int, n_extra=3, ties=True):
    """Two episodes sharing exactly ``n_common`` configurations."""
    configs = [(int(i),) for i in rng.permutation(100)[: n_common + 2 * n_extra]]
    common = configs[:n_common]
    only_a = configs[n_common:n_common + n_extra]
    only_b = configs[n_common + n_extra:]
    draw = (lambda: float(rng.integers(0, 4))) if ties else (lambda: float(rng.normal()))
    a = episode({c: draw() for c in common + only_a}, "a")
    b = episode({c: draw() for c in common + only_b}, "b")
    return a, b
