"""Command line entry point: run grids, render reports, sweep alpha, check datasets."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench.experiment import (
    ConfigError,
    ExperimentConfig,
    GridError,
    RecordError,
    run_experiment,
    sweep_alpha,
)
from .oracle import DatasetError, load_dataset, write_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATASET = 2
EXIT_PARTIAL = 3

log = logging.getLogger("lifeplan")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lifeplan", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="execute a strategy x run grid from a JSON config")
    run.add_argument("config")
    run.add_argument("--jobs", type=int, help="override the config's parallelism")

    rep = sub.add_parser("report", help="tables (and figures) from persisted run records")
    rep.add_argument("records")
    kind = rep.add_mutually_exclusive_group(required=True)
    kind.add_argument("--rq1", dest="kind", action="store_const", const="rq1",
                      help="mean/std and Scott-Knott rank per workload")
    kind.add_argument("--rq2", dest="kind", action="store_const", const="rq2",
                      help="speedup of DLISA against each counterpart")
    kind.add_argument("--rq3", dest="kind", action="store_const", const="rq3",
                      help="win/tie/loss of DLISA against its ablations")
    kind.add_argument("--sweep", dest="kind", action="store_const", const="sweep",
                      help="Scott-Knott ranks per alpha value")
    rep.add_argument("--out", help="output directory (default: next to the records)")
    rep.add_argument("--no-figures", action="store_true")

    sw = sub.add_parser("sweep-alpha", help="run DLISA once per alpha value")
    sw.add_argument("config")
    sw.add_argument("--values", type=_parse_floats,
                    help="comma separated alphas (default 0,0.1,...,0.9)")
    sw.add_argument("--jobs", type=int)
    sw.add_argument("--no-report", action="store_true")

    val = sub.add_parser("validate-dataset", help="load a dataset and print a summary")
    val.add_argument("descriptor")
    val.add_argument("data", nargs="?")

    syn = sub.add_parser("make-synthetic", help="write a generated dataset to a directory")
    syn.add_argument("outdir")
    syn.add_argument("--landscape", default="identical",
                     choices=("identical", "reversed", "independent"))
    syn.add_argument("--workloads", type=int, default=3)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--direction", default="minimize", choices=("minimize", "maximize"))
    return p


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config)
    if getattr(args, "jobs", None) is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        config.jobs = args.jobs
    return config


def cmd_run(args) -> int:
    config = _load_config(args)
    paths = run_experiment(config)
    print(f"{len(paths)} run records in {config.records_dir}")
    return EXIT_OK


def _render(kind: str, records, out_dir: Path, figures: bool) -> list[Path]:
    from .bench import reports

    if kind == "rq1":
        table = reports.report_rq1(records)
    elif kind == "rq2":
        table = reports.report_rq2(records)
    elif kind == "rq3":
        table = reports.report_rq3(records)
    else:
        table = reports.report_sweep(records)
    written = reports.write_report(kind, table, out_dir)
    if figures:
        from .bench import figures as fig

        if kind == "rq1":
            written.append(fig.plot_rank_counts(table.rank1_counts, out_dir / "rq1_rank1.png"))
        elif kind == "rq2":
            metric = reports.objective_of(records).metric_name
            written.append(fig.plot_convergence(reports.curves(records), metric,
                                                out_dir / "rq2_convergence.png"))
        elif kind == "sweep":
            written.append(fig.plot_alpha_ranks(table, out_dir / "alpha_sweep.png"))
    return written


def cmd_report(args) -> int:
    from .bench.reports import load_records

    records_dir = Path(args.records)
    records = load_records(records_dir)
    out = Path(args.out) if args.out else records_dir.parent / "reports"
    for path in _render(args.kind, records, out, not args.no_figures):
        print(path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args)
    paths = sweep_alpha(config, values=args.values)
    print(f"{len(paths)} run records in {config.records_dir}")
    if not args.no_report:
        records = [json.loads(p.read_text(encoding="utf-8")) for p in paths]
        for path in _render("sweep", records, Path(config.output_dir) / "reports", True):
            print(path)
    return EXIT_OK


def cmd_validate(args) -> int:
    twin = load_dataset(args.descriptor, args.data)
    counts = twin.row_counts()
    summary = {
        "system": twin.system,
        "options": len(twin.space.options),
        "space_size": twin.space.size(),
        "workloads": len(twin.workloads),
        "rows": sum(counts.values()),
        "direction": twin.objective.direction.value,
        "rows_per_workload": counts,
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_synthetic(args) -> int:
    from .synthetic import rugged_twin

    twin = rugged_twin(args.workloads, args.landscape, seed=args.seed, direction=args.direction)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    descriptor = out / "system.json"
    write_dataset(twin, descriptor, out / "measurements.csv")
    print(descriptor)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "report": cmd_report,
    "sweep-alpha": cmd_sweep,
    "validate-dataset": cmd_validate,
    "make-synthetic": cmd_synthetic,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, RecordError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except GridError as exc:
        print(f"partial failure: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
