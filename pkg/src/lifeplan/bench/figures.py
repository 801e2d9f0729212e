"""Matplotlib renderings of the report tables, written next to the CSVs."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.dpi": 110,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}


def _grid(n: int):
    cols = min(4, n)
    rows = math.ceil(n / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.6 * rows), squeeze=False)
    for ax in axes.flat[n:]:
        ax.set_visible(False)
    return fig, axes.flat


def plot_convergence(curves: dict, metric: str, path) -> Path:
    """Mean best-so-far against measurements, one panel per workload."""
    workloads = list(curves)
    with plt.rc_context(STYLE):
        fig, axes = _grid(len(workloads))
        for ax, w in zip(axes, workloads):
            for label, arr in sorted(curves[w].items()):
                x = range(1, arr.shape[1] + 1)
                ax.plot(x, arr.mean(axis=0), label=label, lw=1.2)
            ax.set_title(w)
            ax.set_xlabel("measurements")
            ax.set_ylabel(metric)
        axes[0].legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def plot_rank_counts(rank1_counts: dict, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 2.8))
        labels = list(rank1_counts)
        ax.bar(labels, [rank1_counts[k] for k in labels], color="0.4")
        ax.set_ylabel("workloads at rank 1")
        ax.tick_params(axis="x", rotation=30)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def plot_alpha_ranks(rows: list[dict], path) -> Path:
    """Distribution of Scott-Knott ranks over cases, per alpha value."""
    by_alpha = defaultdict(list)
    for row in rows:
        by_alpha[row["alpha"]].append(row["rank"])
    alphas = sorted(by_alpha)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3))
        ax.boxplot([by_alpha[a] for a in alphas], showmeans=True)
        ax.set_xticks(range(1, len(alphas) + 1), [f"{a:g}" for a in alphas])
        ax.set_xlabel("alpha")
        ax.set_ylabel("Scott-Knott rank")
        ax.invert_yaxis()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)
