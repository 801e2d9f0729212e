"""Small generated measurement tables for tests, demos and desk-scale checks."""

from __future__ import annotations

import itertools

import numpy as np

from .core import ConfigSpace, OptionDef, OptionKind, PerformanceObjective
from .oracle import CyberTwin

LANDSCAPES = ("identical", "reversed", "independent")


def rugged_surface(a_levels: int, b_levels: int, rng: np.random.Generator, *,
                   basins: int = 4, curvature: float = 0.5, roughness: float = 0.5) -> np.ndarray:
    """Several quadratic basins of different depth plus uncorrelated noise.

    Basin centres stay off the grid edges, where boundary mutation would
    find them for free. The first basin is the deepest.
    """
    a = np.arange(a_levels)[:, None]
    b = np.arange(b_levels)[None, :]
    surfaces = []
    for k in range(basins):
        a0 = rng.integers(2, max(3, a_levels - 2))
        b0 = rng.integers(2, max(3, b_levels - 2))
        depth = 0.0 if k == 0 else rng.uniform(0.5, 2.0)
        surfaces.append(depth + curvature * ((a - a0) ** 2 / 4 + (b - b0) ** 2))
    surface = np.min(surfaces, axis=0) + roughness * rng.random((a_levels, b_levels))
    return np.round(10.0 + surface, 6)


def rugged_twin(n_workloads: int = 3, landscape: str = "identical", *, a_levels: int = 20,
                b_levels: int = 10, seed: int = 0,
                direction: str = "minimize") -> CyberTwin:
    """Two integer options over a full grid, one table per workload.

    ``identical`` repeats one surface, ``reversed`` alternates a surface
    and its rank reversal, ``independent`` draws a fresh surface each time.
    """
    if landscape not in LANDSCAPES:
        raise ValueError(f"landscape must be one of {LANDSCAPES}")
    rng = np.random.default_rng(seed)
    space = ConfigSpace(
        [OptionDef("a", OptionKind.INTEGER, range(a_levels)),
         OptionDef("b", OptionKind.INTEGER, range(b_levels))],
        PerformanceObjective(direction, "runtime_s" if direction == "minimize" else "throughput"),
    )
    base = rugged_surface(a_levels, b_levels, rng)
    if direction == "maximize":
        base = base.max() + base.min() - base
    workloads = [f"w{i + 1}" for i in range(n_workloads)]
    table = {}
    for t, w in enumerate(workloads):
        if landscape == "identical":
            surf = base
        elif landscape == "reversed":
            surf = base if t % 2 == 0 else base.max() + base.min() - base
        else:
            surf = rugged_surface(a_levels, b_levels, rng)
        for i, j in itertools.product(range(a_levels), range(b_levels)):
            table[((i, j), w)] = float(surf[i, j])
    return CyberTwin(space, workloads, table, system=f"rugged-{landscape}")


def random_twin(rng: np.random.Generator, *, n_options: int | None = None,
                n_workloads: int | None = None, density: float | None = None,
                direction: str | None = None) -> CyberTwin:
    """A random mixed-kind space with a partially filled table per workload."""
    n_options = n_options or int(rng.integers(1, 5))
    options = []
    for k in range(n_options):
        kind = rng.choice(["integer", "boolean", "enumerated"])
        if kind == "integer":
            size = int(rng.integers(2, 7))
            domain = sorted(int(v) for v in rng.choice(50, size=size, replace=False))
        elif kind == "boolean":
            domain = [False, True]
        else:
            domain = [f"v{i}" for i in range(int(rng.integers(2, 5)))]
        options.append(OptionDef(f"o{k}", kind, domain))
    direction = direction or str(rng.choice(["minimize", "maximize"]))
    space = ConfigSpace(options, PerformanceObjective(direction))
    universe = list(itertools.product(*(o.domain for o in options)))
    density = float(rng.uniform(0.3, 1.0)) if density is None else density
    n_workloads = n_workloads or int(rng.integers(1, 4))
    workloads = [f"w{i}" for i in range(n_workloads)]
    table = {}
    for w in workloads:
        keep = max(1, int(round(density * len(universe))))
        for idx in rng.choice(len(universe), size=keep, replace=False):
            table[(universe[idx], w)] = float(np.round(rng.uniform(1.0, 100.0), 3))
    return CyberTwin(space, workloads, table, system="random")
