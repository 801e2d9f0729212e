"""Dataset-backed measurement oracle (the "cyber-twin") and budget accounting."""

from __future__ import annotations

import csv
import glob
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    ConfigSpace,
    Configuration,
    Measurement,
    OptionDef,
    PerformanceObjective,
    SchemaError,
    WorkloadId,
    canonical_key,
)

log = logging.getLogger(__name__)

WORKLOAD_COLUMN = "workload"
PERFORMANCE_COLUMN = "performance"


class DatasetError(ValueError):
    """The descriptor or data file is malformed."""


class BudgetExhausted(RuntimeError):
    """Raised when an unmeasured configuration is requested with no budget left."""


@dataclass
class CyberTwin:
    space: ConfigSpace
    workloads: list[WorkloadId]
    table: dict[tuple[Configuration, WorkloadId], float]
    system: str = "system"
    extrema: dict[WorkloadId, tuple[float, float]] = field(init=False)
    valid_configs: dict[WorkloadId, list[Configuration]] = field(init=False)

    def __post_init__(self):
        self.workloads = list(self.workloads)
        per_workload: dict[WorkloadId, list[tuple[Configuration, float]]] = {
            w: [] for w in self.workloads
        }
        for (config, workload), perf in self.table.items():
            if workload not in per_workload:
                raise DatasetError(f"table mentions undeclared workload {workload!r}")
            per_workload[workload].append((config, perf))
        self.extrema = {}
        self.valid_configs = {}
        for w, rows in per_workload.items():
            if not rows:
                raise DatasetError(f"workload {w!r} has no rows")
            perfs = [p for _, p in rows]
            best = self.objective.best(perfs)
            worst = max(perfs) if self.objective.minimize else min(perfs)
            self.extrema[w] = (best, worst)
            # canonical order keeps random sampling reproducible regardless of file order
            self.valid_configs[w] = sorted(
                (c for c, _ in rows), key=lambda c: canonical_key(self.space, c)
            )
        self._penalties = {w: _penalty_value(self.objective, *self.extrema[w]) for w in self.workloads}

    @property
    def objective(self) -> PerformanceObjective:
        return self.space.objective

    def __len__(self):
        return len(self.table)

    def row_counts(self) -> dict[WorkloadId, int]:
        return {w: len(self.valid_configs[w]) for w in self.workloads}

    def lookup(self, config: Configuration, workload: WorkloadId) -> float | None:
        return self.table.get((config, workload))

    def optimum(self, workload: WorkloadId) -> float:
        return self.extrema[workload][0]


def _penalty_value(objective: PerformanceObjective, best: float, worst: float) -> float:
    if best == worst:
        return worst + 1.0 if objective.minimize else worst - 1.0
    if objective.minimize:
        return worst + (worst - best)
    return worst - (best - worst)


def penalty(twin: CyberTwin, workload: WorkloadId) -> float:
    """Performance assigned to configurations the table cannot answer for."""
    try:
        return twin._penalties[workload]
    except KeyError:
        raise KeyError(f"unknown workload {workload!r}") from None


@dataclass
class BudgetMeter:
    limit: int
    charge_invalid: bool = False
    consumed: int = 0
    cache: dict[Configuration, Measurement] = field(default_factory=dict)

    @property
    def exhausted(self) -> bool:
        return self.consumed >= self.limit

    @property
    def remaining(self) -> int:
        return self.limit - self.consumed


def measure(twin: CyberTwin, workload: WorkloadId, config: Configuration,
            meter: BudgetMeter) -> Measurement:
    cached = meter.cache.get(config)
    if cached is not None:
        return cached
    if meter.exhausted:
        raise BudgetExhausted(f"budget of {meter.limit} measurements used up")
    perf = twin.table.get((config, workload))
    if perf is None:
        m = Measurement(config, workload, penalty(twin, workload), False)
        if meter.charge_invalid:
            meter.consumed += 1
    else:
        m = Measurement(config, workload, perf, True)
        meter.consumed += 1
    meter.cache[config] = m
    return m


# --------------------------------------------------------------------------
# loading

def load_descriptor(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            desc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read descriptor {path}: {exc}") from exc
    for key in ("objective", "options", "workloads"):
        if key not in desc:
            raise DatasetError(f"descriptor {path} lacks {key!r}")
    return desc


def space_from_descriptor(desc: dict) -> ConfigSpace:
    obj = desc["objective"]
    try:
        objective = PerformanceObjective(obj["direction"].lower(), obj.get("metric", "performance"))
        options = []
        for entry in desc["options"]:
            opt = OptionDef(entry["name"], entry["kind"], entry["domain"])
            for bound, value in (("min", opt.minimum), ("max", opt.maximum)):
                if bound in entry and entry[bound] != value:
                    raise SchemaError(
                        f"option {opt.name!r}: declared {bound}={entry[bound]!r} "
                        f"but domain {bound} is {value!r}"
                    )
            options.append(opt)
        return ConfigSpace(options, objective)
    except (KeyError, ValueError) as exc:
        raise DatasetError(f"bad descriptor: {exc}") from exc


def _data_files(data_path) -> list[str]:
    data_path = str(data_path)
    if glob.has_magic(data_path):
        files = sorted(glob.glob(data_path))
        if not files:
            raise DatasetError(f"no data files match {data_path}")
        return files
    if not os.path.exists(data_path):
        raise DatasetError(f"data file {data_path} does not exist")
    return [data_path]


def load_dataset(descriptor_path, data_path=None) -> CyberTwin:
    """Build a CyberTwin from a JSON descriptor and one or more CSV files.

    ``data_path`` may be a glob matching per-workload splits; when omitted the
    descriptor's ``data`` entry is used, relative to the descriptor.
    """
    desc = load_descriptor(descriptor_path)
    space = space_from_descriptor(desc)
    if data_path is None:
        if "data" not in desc:
            raise DatasetError("no data path given and descriptor has no 'data' entry")
        data_path = Path(descriptor_path).parent / desc["data"]
    workloads = [str(w) for w in desc["workloads"]]
    if len(set(workloads)) != len(workloads):
        raise DatasetError("duplicate workload ids in descriptor")
    known = set(workloads)
    expected = set(space.names) | {WORKLOAD_COLUMN, PERFORMANCE_COLUMN}
    table: dict[tuple[Configuration, WorkloadId], float] = {}

    for fname in _data_files(data_path):
        with open(fname, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            unknown = [c for c in header if c not in expected]
            if unknown:
                raise DatasetError(f"{fname}: unknown column(s) {unknown}")
            missing = expected - set(header)
            if missing:
                raise DatasetError(f"{fname}: missing column(s) {sorted(missing)}")
            for lineno, row in enumerate(reader, start=2):
                where = f"{fname}:{lineno}"
                try:
                    config = tuple(opt.parse(row[opt.name]) for opt in space.options)
                except SchemaError as exc:
                    raise DatasetError(f"{where}: {exc}") from None
                workload = row[WORKLOAD_COLUMN].strip()
                if workload not in known:
                    raise DatasetError(f"{where}: undeclared workload {workload!r}")
                try:
                    perf = float(row[PERFORMANCE_COLUMN])
                except (TypeError, ValueError):
                    raise DatasetError(
                        f"{where}: bad performance value {row[PERFORMANCE_COLUMN]!r}"
                    ) from None
                if (config, workload) in table:
                    raise DatasetError(f"{where}: duplicate row for configuration under {workload!r}")
                table[(config, workload)] = perf

    twin = CyberTwin(space, workloads, table, system=desc.get("system", "system"))
    for w, n in twin.row_counts().items():
        log.info("workload %s: %d rows", w, n)
    return twin


def write_dataset(twin: CyberTwin, descriptor_path, data_path) -> None:
    """Serialize a twin in the same descriptor + CSV format the loader reads."""
    desc = {
        "system": twin.system,
        "objective": {"direction": twin.objective.direction.value,
                      "metric": twin.objective.metric_name},
        "options": [{"name": o.name, "kind": o.kind.value, "domain": list(o.domain)}
                    for o in twin.space.options],
        "workloads": list(twin.workloads),
    }
    try:
        desc["data"] = str(Path(data_path).relative_to(Path(descriptor_path).parent))
    except ValueError:
        desc["data"] = str(Path(data_path).resolve())
    with open(descriptor_path, "w", encoding="utf-8") as fh:
        json.dump(desc, fh, indent=2)
    with open(data_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(twin.space.names + [WORKLOAD_COLUMN, PERFORMANCE_COLUMN])
        for w in twin.workloads:
            for config in twin.valid_configs[w]:
                cells = [o.format(v) for o, v in zip(twin.space.options, config)]
                writer.writerow(cells + [w, repr(twin.table[(config, w)])])
