"""Render evaluation figures next to the report files.

The report path of the CLI writes report.json, its CSV twin, and the PNGs
produced here: one bar chart of the metrics per group, and one prevalence
chart per group showing the member share behind each selected key point.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import EvalReport
from .text import group_slug

_METRIC_LABELS = ["rouge1", "rouge2", "sP", "sR", "sF1"]


def render_report_figure(report: EvalReport, out_path: Path | str) -> Path:
    """Grouped bar chart of the five metrics for every group plus the macro."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    labels = [f"{s.topic[:24]} ({s.stance})" for s in report.groups] + ["macro"]
    series = {
        m: [getattr(s, m) for s in report.groups] + [report.macro[m]]
        for m in _METRIC_LABELS
    }

    x = np.arange(len(labels))
    width = 0.16
    fig, ax = plt.subplots(figsize=(max(6.0, 1.6 * len(labels)), 4.0))
    for offset, metric in enumerate(_METRIC_LABELS):
        ax.bar(x + (offset - 2) * width, series[metric], width, label=metric)
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.set_title(f"Key-point evaluation (sim: {report.sim_name})")
    ax.legend(fontsize=8, ncol=5, loc="upper center")
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path


def render_prevalence_figure(partition_doc: dict, out_path: Path | str) -> Path:
    """Horizontal bars: prevalence of each subgraph's selected key point."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    subgraphs = partition_doc["subgraphs"]
    names = [
        (sg["key_point"][:60] if sg["key_point"] else f"(subgraph {i}: no key point)")
        for i, sg in enumerate(subgraphs)
    ]
    values = [sg["prevalence"] for sg in subgraphs]

    fig, ax = plt.subplots(figsize=(8.0, max(2.0, 0.4 * len(names))))
    y = np.arange(len(names))
    ax.barh(y, values, color="#4878a8")
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("prevalence (fraction of group arguments)")
    ax.set_title(f"{partition_doc['topic']} ({partition_doc['stance']})", fontsize=10)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path


def render_all(
    report: EvalReport, partition_docs: list[dict], figures_dir: Path | str
) -> list[Path]:
    """Write the full figure set for a run; returns the created paths."""
    figures_dir = Path(figures_dir)
    created = [render_report_figure(report, figures_dir / "metrics_by_group.png")]
    for doc in partition_docs:
        slug = group_slug(doc["topic"], doc["stance"])
        created.append(
            render_prevalence_figure(doc, figures_dir / f"prevalence_{slug}.png")
        )
    return created
