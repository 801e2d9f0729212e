"""Domain types shared across the planner: option schema, configurations,
measurements, planning episodes and the knowledge base."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Sequence


class SchemaError(ValueError):
    """A configuration or option definition violates the declared schema."""


class ContractError(ValueError):
    """A function was called outside its precondition."""


class OptionKind(str, enum.Enum):
    INTEGER = "integer"
    BOOLEAN = "boolean"
    ENUMERATED = "enumerated"


class Direction(str, enum.Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class Ordering(enum.IntEnum):
    BETTER = -1
    EQUAL = 0
    WORSE = 1


def _token(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


@dataclass(frozen=True)
class OptionDef:
    name: str
    kind: OptionKind
    domain: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", OptionKind(self.kind))
        object.__setattr__(self, "domain", tuple(self.domain))
        if not self.domain:
            raise SchemaError(f"option {self.name!r}: empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise SchemaError(f"option {self.name!r}: duplicate domain values")
        if self.kind is OptionKind.INTEGER:
            if any(isinstance(v, bool) or not isinstance(v, int) for v in self.domain):
                raise SchemaError(f"option {self.name!r}: integer domain must hold ints")
            if list(self.domain) != sorted(self.domain):
                raise SchemaError(f"option {self.name!r}: integer domain must be ascending")
        # token -> value, used by the CSV parser
        object.__setattr__(self, "_tokens", {_token(v): v for v in self.domain})
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.domain)})

    @property
    def minimum(self):
        return self.domain[0]

    @property
    def maximum(self):
        return self.domain[-1]

    def index(self, value) -> int:
        try:
            return self._index[value]
        except (KeyError, TypeError):
            raise SchemaError(f"option {self.name!r}: value {value!r} not in domain") from None

    def parse(self, token: str):
        """Map a serialized cell back to the domain value it names."""
        token = token.strip()
        if token in self._tokens:
            return self._tokens[token]
        if self.kind is OptionKind.BOOLEAN:
            lowered = token.lower()
            if lowered in self._tokens:
                return self._tokens[lowered]
        if self.kind is OptionKind.INTEGER:
            try:
                as_int = int(float(token))
            except ValueError:
                pass
            else:
                if float(token) == as_int and as_int in self._index:
                    return as_int
        raise SchemaError(f"option {self.name!r}: value {token!r} not in domain")

    def format(self, value) -> str:
        return _token(value)


@dataclass(frozen=True)
class PerformanceObjective:
    direction: Direction
    metric_name: str = "performance"

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))

    @property
    def minimize(self) -> bool:
        return self.direction is Direction.MINIMIZE

    def sort_key(self, value: float) -> float:
        """Key under which smaller means better."""
        return value if self.minimize else -value

    def best(self, values):
        return min(values) if self.minimize else max(values)

    def better_or_equal(self, a: float, b: float) -> bool:
        return a <= b if self.minimize else a >= b


# A configuration is a tuple of option values aligned with ConfigSpace.options.
Configuration = tuple
WorkloadId = str


@dataclass(frozen=True)
class ConfigSpace:
    options: tuple
    objective: PerformanceObjective

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        if not self.options:
            raise SchemaError("configuration space needs at least one option")
        names = [o.name for o in self.options]
        if len(set(names)) != len(names):
            raise SchemaError("option names must be unique")

    @property
    def names(self) -> list[str]:
        return [o.name for o in self.options]

    def __len__(self):
        return len(self.options)

    def validate(self, config: Sequence) -> Configuration:
        if len(config) != len(self.options):
            raise SchemaError(
                f"configuration has {len(config)} values, space has {len(self.options)} options"
            )
        for opt, value in zip(self.options, config):
            opt.index(value)
        return tuple(config)

    def size(self) -> int:
        return math.prod(len(o.domain) for o in self.options)


def compare(objective: PerformanceObjective, a: float, b: float) -> Ordering:
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ContractError(f"compare needs finite values, got {a!r}, {b!r}")
    if a == b:
        return Ordering.EQUAL
    if objective.minimize:
        return Ordering.BETTER if a < b else Ordering.WORSE
    return Ordering.BETTER if a > b else Ordering.WORSE


def canonical_key(space: ConfigSpace, config: Sequence) -> tuple[int, ...]:
    """Stable identity of a configuration: its per-option domain indices."""
    if len(config) != len(space.options):
        raise SchemaError("configuration length does not match the space")
    return tuple(opt.index(v) for opt, v in zip(space.options, config))


def from_key(space: ConfigSpace, key: Sequence[int]) -> Configuration:
    return tuple(opt.domain[i] for opt, i in zip(space.options, key))


@dataclass(frozen=True, slots=True)
class Measurement:
    config: Configuration
    workload: WorkloadId
    performance: float
    valid: bool


@dataclass
class Episode:
    """Everything measured while planning under one workload."""

    workload: WorkloadId
    evaluated: dict[Configuration, Measurement] = field(default_factory=dict)
    elite: list[Configuration] = field(default_factory=list)
    best: Configuration | None = None
    trajectory: list[tuple[int, float]] = field(default_factory=list)

    def valid_items(self) -> list[Measurement]:
        return [m for m in self.evaluated.values() if m.valid]

    @property
    def best_performance(self) -> float | None:
        if self.best is None:
            return None
        return self.evaluated[self.best].performance

    def ranked_valid(self, objective: PerformanceObjective) -> list[Configuration]:
        """Valid configurations best-first; ties keep measurement order."""
        valid = self.valid_items()
        valid.sort(key=lambda m: objective.sort_key(m.performance))
        return [m.config for m in valid]


@dataclass
class KnowledgeBase:
    episodes: list[Episode] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.episodes)

    def add(self, episode: Episode) -> None:
        self.episodes.append(episode)

    def __len__(self):
        return len(self.episodes)

