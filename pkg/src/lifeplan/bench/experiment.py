"""Experiment grid execution: strategies x repetitions (x alpha values), one
JSON record per run, resumable by file name."""

from __future__ import annotations

import json
import logging
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..baselines import canonical_name, get_strategy
from ..oracle import CyberTwin, load_dataset
from ..planner import PlannerParams, derive_rng, lifelong_run

log = logging.getLogger(__name__)

OUTPUT_ENV = "LIFEPLAN_OUTPUT"
RECORDS_DIR = "records"


class ConfigError(ValueError):
    """Experiment configuration is unusable."""


class RecordError(RuntimeError):
    """A persisted run record cannot be read."""


class GridError(RuntimeError):
    """Some runs of the grid failed; the others were written."""

    def __init__(self, failures):
        self.failures = failures
        super().__init__(f"{len(failures)} run(s) failed: " +
                         "; ".join(f"{k}: {e}" for k, e in failures[:5]))


@dataclass
class ExperimentConfig:
    descriptor: str
    data: str | None = None
    strategies: list[str] = field(default_factory=lambda: ["DLISA", "FEMOSAA"])
    runs: int = 100
    params: PlannerParams = field(default_factory=PlannerParams)
    alphas: list[float] | None = None
    output_dir: str = "results"
    jobs: int = 1
    # same workload permutation for every strategy at a given run index
    paired_orders: bool = True

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        try:
            self.strategies = [canonical_name(s) for s in self.strategies]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.alphas is not None:
            if any(not 0.0 <= a <= 1.0 for a in self.alphas):
                raise ConfigError("alpha values must lie in [0, 1]")
            self.alphas = [float(a) for a in self.alphas]
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str | os.PathLike = ".") -> "ExperimentConfig":
        raw = dict(raw)
        base = Path(base_dir)
        dataset = raw.pop("dataset", {})
        if isinstance(dataset, str):
            dataset = {"descriptor": dataset}
        descriptor = dataset.get("descriptor", raw.pop("descriptor", None))
        if descriptor is None:
            raise ConfigError("config needs dataset.descriptor")
        data = dataset.get("data", raw.pop("data", None))
        known_params = {f.name for f in fields(PlannerParams)}
        params_raw = raw.pop("params", {}) or {}
        unknown = set(params_raw) - known_params
        if unknown:
            raise ConfigError(f"unknown planner parameter(s): {sorted(unknown)}")
        # top-level toggles are accepted as shorthands for planner params
        for key in list(raw):
            if key in known_params:
                params_raw.setdefault(key, raw.pop(key))
        output = raw.pop("output_dir", None) or os.environ.get(OUTPUT_ENV) or "results"
        allowed = {"strategies", "runs", "alphas", "jobs", "paired_orders"}
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        try:
            params = PlannerParams(**params_raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad planner parameters: {exc}") from None
        return cls(
            descriptor=str(base / descriptor),
            data=str(base / data) if data else None,
            params=params,
            output_dir=str(base / output),
            **raw,
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw, Path(path).parent)

    @property
    def records_dir(self) -> Path:
        return Path(self.output_dir) / RECORDS_DIR


def record_name(strategy: str, alpha: float, run_index: int) -> str:
    return f"{strategy}__alpha-{alpha:.2f}__run-{run_index:04d}.json"


def dump_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, indent=1) + "\n"


def workload_order(twin: CyberTwin, master_seed: int, run_index: int,
                   strategy: str, paired: bool):
    keys = [master_seed, run_index, 0]
    if not paired:
        keys.append(zlib.crc32(strategy.encode()))
    return [str(w) for w in derive_rng(*keys).permutation(twin.workloads)]


def execute_run(twin: CyberTwin, strategy: str, run_index: int, params: PlannerParams,
                paired: bool = True) -> dict:
    """One lifelong run, deterministic in (params.master_seed, run_index)."""
    order = workload_order(twin, params.master_seed, run_index, strategy, paired)
    rng = derive_rng(params.master_seed, run_index, 1)
    rec = lifelong_run(twin, order, params, get_strategy(strategy), rng,
                       run_id=run_index, strategy_name=strategy)
    out = rec.to_dict(twin.space)
    out["alpha"] = params.alpha
    out["system"] = twin.system
    out["paired_orders"] = paired
    return out


# worker-process state; the twin is loaded once per process
_TWIN: CyberTwin | None = None


def _init_worker(descriptor, data):
    global _TWIN
    _TWIN = load_dataset(descriptor, data)


def _task(args):
    strategy, run_index, params, paired, path = args
    record = execute_run(_TWIN, strategy, run_index, params, paired)
    _write_atomic(Path(path), dump_record(record))
    return path


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _completed(path: Path) -> bool:
    if not path.exists():
        return False
    try:
        json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise RecordError(f"corrupt run record {path}: {exc}") from exc
    return True


def run_experiment(config: ExperimentConfig, twin: CyberTwin | None = None,
                   alphas: list[float] | None = None) -> list[Path]:
    """Execute the grid and return every record path (existing ones included)."""
    global _TWIN
    if twin is None:
        twin = load_dataset(config.descriptor, config.data)
    alphas = alphas if alphas is not None else [config.params.alpha]
    out_dir = config.records_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "descriptor": config.descriptor,
        "data": config.data,
        "strategies": config.strategies,
        "runs": config.runs,
        "alphas": alphas,
        "params": config.params.to_dict(),
        "paired_orders": config.paired_orders,
        "system": twin.system,
    }
    _write_atomic(Path(config.output_dir) / "experiment.json", dump_record(meta))

    paths, todo = [], []
    for alpha in alphas:
        params = replace(config.params, alpha=alpha)
        for strategy in config.strategies:
            for r in range(config.runs):
                path = out_dir / record_name(strategy, alpha, r)
                paths.append(path)
                if not _completed(path):
                    todo.append((strategy, r, params, config.paired_orders, str(path)))
    log.info("%d of %d runs to execute", len(todo), len(paths))

    failures = []
    if config.jobs == 1:
        _TWIN = twin
        for args in todo:
            try:
                _task(args)
            except Exception as exc:  # keep going; report at the end
                failures.append((args[-1], exc))
    else:
        with ProcessPoolExecutor(config.jobs, initializer=_init_worker,
                                 initargs=(config.descriptor, config.data)) as pool:
            futures = [(args, pool.submit(_task, args)) for args in todo]
            for args, fut in futures:
                try:
                    fut.result()
                except Exception as exc:
                    failures.append((args[-1], exc))
    if failures:
        raise GridError(failures)
    return paths


def sweep_alpha(config: ExperimentConfig, values=None, twin: CyberTwin | None = None) -> list[Path]:
    """Run the distilled-seeding planner once per alpha value."""
    values = values if values is not None else (config.alphas or [round(0.1 * i, 1) for i in range(10)])
    sweep_cfg = replace(config, strategies=["DLISA"], alphas=list(values))
    return run_experiment(sweep_cfg, twin=twin, alphas=sweep_cfg.alphas)
