"""Static ROC, precision-recall and score-timeline figures for a report."""

from __future__ import annotations

from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from .metrics import MetricsReport


def roc_points(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    """(FPR, TPR) at every distinct score threshold, from (0, 0) to (1, 1)."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    pos, neg = y.sum(), (1 - y).sum()
    fpr, tpr = [0.0], [0.0]
    for t in np.unique(s)[::-1]:
        hit = s >= t
        tpr.append((hit & (y == 1)).sum() / pos if pos else 0.0)
        fpr.append((hit & (y == 0)).sum() / neg if neg else 0.0)
    return np.array(fpr), np.array(tpr)


def pr_points(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    pos = y.sum()
    rec, prec = [0.0], [1.0]
    for t in np.unique(s)[::-1]:
        hit = s >= t
        tp = (hit & (y == 1)).sum()
        rec.append(tp / pos if pos else 0.0)
        prec.append(tp / hit.sum())
    return np.array(rec), np.array(prec)


def plot_report(report: MetricsReport, out_dir: Union[str, Path]) -> List[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scores, labels = report.scores, report.labels
    written = []

    fig, ax = plt.subplots(figsize=(4, 4))
    if len(set(labels)) == 2:
        fpr, tpr = roc_points(scores, labels)
        ax.plot(fpr, tpr, marker=".")
    ax.plot([0, 1], [0, 1], ls=":", c="grey")
    auc = "n/a" if report.roc_auc is None else f"{report.roc_auc:.3f}"
    ax.set(xlabel="false positive rate", ylabel="true positive rate", title=f"ROC (AUC {auc})")
    fig.tight_layout()
    written.append(out / "roc.png")
    fig.savefig(written[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(4, 4))
    if len(set(labels)) == 2:
        rec, prec = pr_points(scores, labels)
        ax.step(rec, prec, where="post")
    auc = "n/a" if report.prc_auc is None else f"{report.prc_auc:.3f}"
    ax.set(xlabel="recall", ylabel="precision", ylim=(0, 1.05), title=f"Precision-recall (AP {auc})")
    fig.tight_layout()
    written.append(out / "prc.png")
    fig.savefig(written[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 3))
    idx = np.arange(len(scores))
    ax.fill_between(idx, 0, labels, step="mid", alpha=0.2, color="red", label="attack window")
    ax.plot(idx, scores, marker="o", ms=3, label="attack probability")
    if report.preds:
        flagged = [i for i, p in enumerate(report.preds) if p]
        ax.scatter(flagged, [1.02] * len(flagged), marker="v", c="k", s=12, label="flagged")
    ax.set(xlabel="test window", ylabel="score", ylim=(-0.05, 1.1))
    ax.legend(loc="upper left", fontsize=7)
    fig.tight_layout()
    written.append(out / "timeline.png")
    fig.savefig(written[-1], dpi=120)
    plt.close(fig)
    return written
