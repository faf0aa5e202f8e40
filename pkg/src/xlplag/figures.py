"""Figure rendering for evaluation outputs.

Every renderer takes already-computed numbers and a target path, writes
one image file, and returns the path. Nothing here recomputes metrics.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_BAR_COLOR = "#4878a8"
_LINE_COLOR = "#b0413e"


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def recall_curve(recall_at: dict[int, float], path, title: str = "Recall at cutoff"):
    """Line plot of recall@k over k, k on a log-ish ordinal axis."""
    ks = sorted(recall_at)
    values = [recall_at[k] for k in ks]
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(range(len(ks)), values, marker="o", color=_LINE_COLOR)
    ax.set_xticks(range(len(ks)))
    ax.set_xticklabels([str(k) for k in ks])
    ax.set_ylim(0.0, 1.05)
    ax.set_xlabel("k")
    ax.set_ylabel("recall")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def metric_bars(metrics: dict[str, float], path, title: str = "Detection quality"):
    """Bar chart for precision/recall/f1 style dictionaries."""
    names = list(metrics)
    values = [metrics[name] for name in names]
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.bar(range(len(names)), values, color=_BAR_COLOR)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names)
    ax.set_ylim(0.0, 1.05)
    for i, v in enumerate(values):
        ax.text(i, v + 0.02, f"{v:.3f}", ha="center", fontsize=8)
    ax.set_title(title)
    return _finish(fig, path)


def coverage_bars(coverages: dict[str, float], path, title: str = "Lexical coverage"):
    """Horizontal bars comparing dictionary coverage on a corpus."""
    names = list(coverages)
    values = [coverages[name] for name in names]
    fig, ax = plt.subplots(figsize=(5.0, 0.6 * max(len(names), 2) + 1.6))
    ax.barh(range(len(names)), values, color=_BAR_COLOR)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("covered fraction")
    for i, v in enumerate(values):
        ax.text(min(v + 0.01, 0.92), i, f"{v:.3f}", va="center", fontsize=8)
    ax.set_title(title)
    return _finish(fig, path)
