"""Tables computed from persisted run records: effectiveness ranks, speedup,
ablation win/tie/loss and alpha sensitivity."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import PerformanceObjective
from ..stats import SampleSet, pairwise_outcome, sk_ranks, speedup, summarize
from .experiment import RecordError

REFERENCE = "DLISA"
ABLATIONS = ("DLISA_I", "DLISA_II")


def load_records(records_dir) -> list[dict]:
    records_dir = Path(records_dir)
    if not records_dir.is_dir():
        raise RecordError(f"records directory {records_dir} does not exist")
    records = []
    for path in sorted(records_dir.glob("*.json")):
        try:
            records.append(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise RecordError(f"corrupt run record {path}: {exc}") from exc
    if not records:
        raise RecordError(f"no run records in {records_dir}")
    return records


def objective_of(records) -> PerformanceObjective:
    obj = records[0]["objective"]
    return PerformanceObjective(obj["direction"], obj.get("metric", "performance"))


def _workloads(records) -> list[str]:
    seen = {}
    for rec in records:
        for w in rec["workload_order"]:
            seen.setdefault(w, None)
    return sorted(seen, key=_natural_key)


def _natural_key(s: str):
    import re
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", s)]


def final_values(records, key=lambda rec: rec["strategy"]) -> dict:
    """{workload: {label: [final performance per run]}}; grouped by workload id
    regardless of where the workload appeared in each run's order."""
    out: dict = defaultdict(lambda: defaultdict(list))
    for rec in sorted(records, key=lambda r: (key(r), r["run_id"])):
        for ep in rec["episodes"]:
            if ep["best_performance"] is not None:
                out[ep["workload"]][key(rec)].append(ep["best_performance"])
    return out


def curves(records, budget: int | None = None, key=lambda rec: rec["strategy"]) -> dict:
    """{workload: {label: (runs x budget) best-so-far array}}, padded forward."""
    out: dict = defaultdict(lambda: defaultdict(list))
    for rec in sorted(records, key=lambda r: (key(r), r["run_id"])):
        width = budget or rec["params"]["budget"]
        for ep in rec["episodes"]:
            traj = ep["trajectory"]
            if not traj:
                continue
            row = np.empty(width)
            last = traj[0][1]
            points = dict((int(c), v) for c, v in traj)
            for c in range(1, width + 1):
                last = points.get(c, last)
                row[c - 1] = last
            out[ep["workload"]][key(rec)].append(row)
    return {w: {k: np.array(v) for k, v in d.items()} for w, d in out.items()}


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "N/A"
    return f"{x:.4g}" if isinstance(x, float) else str(x)


def write_csv(path, rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if not rows:
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def markdown_table(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for row in rows:
        lines.append("| " + " | ".join(_fmt(row[c]) for c in cols) + " |")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# RQ1: effectiveness

@dataclass
class ReportTable:
    rows: list[dict] = field(default_factory=list)
    rank1_counts: dict[str, int] = field(default_factory=dict)
    speedups: list[dict] = field(default_factory=list)

    def markdown(self) -> str:
        text = markdown_table(self.rows)
        if self.rank1_counts:
            text += "\n" + markdown_table(
                [{"strategy": k, "rank-1 workloads": v} for k, v in self.rank1_counts.items()]
            )
        return text


def report_rq1(records) -> ReportTable:
    objective = objective_of(records)
    finals = final_values(records)
    table = ReportTable()
    strategies = sorted({rec["strategy"] for rec in records})
    table.rank1_counts = {s: 0 for s in strategies}
    for w in _workloads(records):
        samples = [SampleSet(s, finals[w][s]) for s in strategies if finals[w].get(s)]
        stats = summarize(samples)
        ranks = sk_ranks(samples, objective)
        best_mean = objective.best([stats[s.label].mean for s in samples])
        for s in samples:
            st = stats[s.label]
            table.rows.append({
                "workload": w, "strategy": s.label, "rank": ranks[s.label],
                "mean": st.mean, "std": st.std, "runs": st.n,
                "best_mean": st.mean == best_mean,
            })
            if ranks[s.label] == 1:
                table.rank1_counts[s.label] += 1
    return table


# --------------------------------------------------------------------------
# RQ2: efficiency

def report_rq2(records, reference: str = REFERENCE) -> ReportTable:
    objective = objective_of(records)
    traj = curves(records)
    strategies = sorted({rec["strategy"] for rec in records})
    if reference not in strategies:
        raise RecordError(f"speedup needs {reference} records")
    table = ReportTable()
    tally = {s: {"s>1": 0, "s=1": 0, "0<s<1": 0, "N/A": 0, "min": None, "max": None}
             for s in strategies}
    for w in _workloads(records):
        for other in strategies:
            if other not in traj[w] or reference not in traj[w]:
                continue
            s = speedup(traj[w][other], traj[w][reference], objective)
            table.speedups.append({"workload": w, "counterpart": other, "s": s})
            t = tally[other]
            if s is None:
                t["N/A"] += 1
                continue
            t["s>1" if s > 1 else "s=1" if s == 1 else "0<s<1"] += 1
            t["min"] = s if t["min"] is None else min(t["min"], s)
            t["max"] = s if t["max"] is None else max(t["max"], s)
    table.rows = [{"counterpart": k, **v} for k, v in tally.items()]
    return table


# --------------------------------------------------------------------------
# RQ3: ablations

def report_rq3(records, reference: str = REFERENCE, variants=ABLATIONS) -> ReportTable:
    objective = objective_of(records)
    finals = final_values(records)
    table = ReportTable()
    tally = {v: {"+": 0, "=": 0, "-": 0} for v in variants}
    for w in _workloads(records):
        ours = finals[w].get(reference)
        if not ours:
            continue
        for v in variants:
            theirs = finals[w].get(v)
            if not theirs:
                continue
            outcome = pairwise_outcome(ours, theirs, objective)
            tally[v][outcome] += 1
            table.speedups.append({"workload": w, "variant": v, "outcome": outcome})
    table.rows = [
        {"variant": v, "summary": f"{t['+']}+/{t['=']}=/{t['-']}-", **t}
        for v, t in tally.items()
    ]
    return table


# --------------------------------------------------------------------------
# RQ4: alpha sensitivity

def report_sweep(records) -> list[dict]:
    """One row per (alpha, workload) with the Scott-Knott rank among alphas."""
    objective = objective_of(records)
    finals = final_values(records, key=lambda rec: f"{rec['alpha']:.2f}")
    rows = []
    for w in _workloads(records):
        samples = [SampleSet(a, v) for a, v in sorted(finals[w].items())]
        ranks = sk_ranks(samples, objective)
        for s in samples:
            rows.append({"alpha": float(s.label), "case": w, "rank": ranks[s.label],
                         "mean": float(np.mean(s.values))})
    rows.sort(key=lambda r: (r["alpha"], _natural_key(r["case"])))
    return rows


def write_report(kind: str, table, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if kind == "sweep":
        write_csv(out_dir / "alpha_sweep.csv", table)
        (out_dir / "alpha_sweep.md").write_text(markdown_table(table), encoding="utf-8")
        return [out_dir / "alpha_sweep.csv", out_dir / "alpha_sweep.md"]
    write_csv(out_dir / f"{kind}.csv", table.rows)
    written.append(out_dir / f"{kind}.csv")
    if table.speedups:
        detail = out_dir / f"{kind}_detail.csv"
        write_csv(detail, table.speedups)
        written.append(detail)
    md = out_dir / f"{kind}.md"
    text = table.markdown()
    if table.speedups:
        text += "\n" + markdown_table(table.speedups)
    md.write_text(text, encoding="utf-8")
    written.append(md)
    return written
