"""Delimited outputs and the figures rendered alongside them.

Comparison tables are CSV with one row per (instance, method); the
figure next to the table shows mean expected profit per method.
Evaluation reports get a per-sample profit histogram. Figures are
written as PNG with pinned metadata so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

PNG_METADATA = {"Software": "priceflow"}


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_comparison_csv(rows: list[dict], path: str | Path) -> None:
    """Columns: instance, method, obj, stderr, time_seconds, best."""
    fields = ["instance", "method", "obj", "stderr", "time_seconds", "best"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_fmt(row[f]) for f in fields])


def write_samples_csv(samples: tuple[float, ...], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample", "profit"])
        for i, p in enumerate(samples):
            writer.writerow([i, repr(float(p))])


def comparison_figure(rows: list[dict], path: str | Path) -> None:
    """Bar chart of mean expected profit per method, best bar hatched."""
    methods: list[str] = []
    for row in rows:
        if row["method"] not in methods:
            methods.append(row["method"])
    means = []
    errs = []
    for m in methods:
        objs = [row["obj"] for row in rows if row["method"] == m]
        ses = [row["stderr"] for row in rows if row["method"] == m]
        means.append(sum(objs) / len(objs))
        errs.append(sum(ses) / len(ses))
    best = max(range(len(methods)), key=lambda i: means[i])

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    bars = ax.bar(range(len(methods)), means, yerr=errs, capsize=4, color="#5b8db8")
    bars[best].set_hatch("//")
    bars[best].set_edgecolor("black")
    ax.set_xticks(range(len(methods)))
    ax.set_xticklabels(methods, rotation=15)
    ax.set_ylabel("expected profit (obj)")
    ax.set_title("expected profit by pricing method")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=PNG_METADATA)
    plt.close(fig)


def profit_histogram(samples: tuple[float, ...], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.hist(samples, bins=min(30, max(5, len(samples) // 4)), color="#5b8db8")
    ax.set_xlabel("per-sample matching profit")
    ax.set_ylabel("count")
    ax.set_title(f"profit distribution over {len(samples)} samples")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=PNG_METADATA)
    plt.close(fig)
