"""Matplotlib renderings of the experiment outputs, written to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .discovery import RocPoint, SinkBarCell


def save_sink_bar_chart(cells: list[SinkBarCell], path, title: str | None = None) -> None:
    """Grouped bar chart of sink picks: one group per sample size."""
    vertices = sorted(cells[0].counts) if cells else []
    n_groups = len(cells)
    width = 0.8 / max(len(vertices), 1)
    fig, ax = plt.subplots(figsize=(1.8 * n_groups + 3, 4))
    for k, v in enumerate(vertices):
        xs = [g + k * width for g in range(n_groups)]
        ys = [cell.counts[v] for cell in cells]
        ax.bar(xs, ys, width=width, label=f"vertex {v}")
    ax.set_xticks([g + 0.4 - width / 2 for g in range(n_groups)])
    ax.set_xticklabels([str(cell.n_samples) for cell in cells])
    ax.set_xlabel("samples")
    ax.set_ylabel("times picked as sink")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_roc_curve(points: list[RocPoint], path, title: str | None = None) -> None:
    """ROC curve over the threshold sweep, with the chance diagonal for reference."""
    pts = sorted(points, key=lambda p: (p.fpr, p.tpr))
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([p.fpr for p in pts], [p.tpr for p in pts], "o-", ms=4)
    ax.plot([0, 1], [0, 1], "--", color="gray", lw=1)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
