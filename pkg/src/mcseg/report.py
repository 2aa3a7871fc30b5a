"""Benchmark CSV output and matplotlib figures written next to it."""

from __future__ import annotations

import csv
import os
from collections import OrderedDict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

ROW_CLASSES = ("cycle", "terminal-triangle", "multi-terminal", "odd-wheel")
RUN_HEADER = ["instance", "schedule", "runtime_ms", "value", "bound", "status"] + [f"rows_{c}" for c in ROW_CLASSES] + ["error"]
SUMMARY_HEADER = ["schedule", "runs", "failures", "mean_runtime_ms", "mean_value", "mean_bound", "verified", "verified_fraction"]

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}


def write_runs(path: str, rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=RUN_HEADER, quoting=csv.QUOTE_MINIMAL)
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in RUN_HEADER})


def summarize(rows: list) -> list:
    groups: "OrderedDict[str, list]" = OrderedDict()
    for r in rows:
        groups.setdefault(r["schedule"], []).append(r)
    out = []
    for sched, rs in groups.items():
        ok = [r for r in rs if not r.get("error")]

        def mean(key):
            vals = [float(r[key]) for r in ok if r[key] != ""]
            return sum(vals) / len(vals) if vals else ""

        verified = sum(1 for r in ok if r["status"] == "verified-optimal")
        out.append({
            "schedule": sched,
            "runs": len(rs),
            "failures": len(rs) - len(ok),
            "mean_runtime_ms": mean("runtime_ms"),
            "mean_value": mean("value"),
            "mean_bound": mean("bound"),
            "verified": f"{verified}/{len(rs)}",
            "verified_fraction": verified / len(rs) if rs else "",
        })
    return out


def write_summary(path: str, summary: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_HEADER)
        w.writeheader()
        for r in summary:
            w.writerow(r)


def render_figures(csv_path: str, rows: list, summary: list) -> list:
    """Runtime and gap figures as PNG files beside ``csv_path``; returns their paths."""
    if not rows:
        return []
    stem = os.path.splitext(csv_path)[0]
    paths = []
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.0))
        names = [s["schedule"] for s in summary]
        times = [s["mean_runtime_ms"] if s["mean_runtime_ms"] != "" else 0.0 for s in summary]
        ax.bar(range(len(names)), times, color="0.45")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=30, ha="right")
        ax.set_ylabel("mean runtime [ms]")
        ax.set_title("Runtime per schedule")
        p = f"{stem}_runtime.png"
        fig.savefig(p)
        plt.close(fig)
        paths.append(p)

        fig, ax = plt.subplots(figsize=(5.0, 3.0))
        for k, name in enumerate(names):
            gaps = [float(r["value"]) - float(r["bound"]) for r in rows
                    if r["schedule"] == name and not r.get("error") and r["value"] != "" and r["bound"] != ""]
            ax.scatter([k] * len(gaps), [max(g, 1e-12) for g in gaps], s=12)
        ax.set_yscale("log")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=30, ha="right")
        ax.set_ylabel("value - bound")
        ax.set_title("Optimality gap per instance")
        p = f"{stem}_gap.png"
        fig.savefig(p)
        plt.close(fig)
        paths.append(p)
    return paths
