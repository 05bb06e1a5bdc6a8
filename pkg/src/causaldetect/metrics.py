"""Window-level detection metrics and structural graph distance.

Undefined metrics (empty denominators, single-class labels) are returned as
``None`` rather than 0.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .graph import CausalGraph


def _binary(x, name: str) -> np.ndarray:
    a = np.asarray(x).astype(int).ravel()
    if not np.isin(a, (0, 1)).all():
        raise ValueError(f"{name} must be binary")
    return a


def confusion(preds, labels) -> Dict[str, int]:
    p = _binary(preds, "preds")
    y = _binary(labels, "labels")
    if p.shape != y.shape:
        raise ValueError("preds and labels differ in length")
    return {
        "tp": int(np.sum((p == 1) & (y == 1))),
        "fp": int(np.sum((p == 1) & (y == 0))),
        "tn": int(np.sum((p == 0) & (y == 0))),
        "fn": int(np.sum((p == 0) & (y == 1))),
    }


def point_adjusted_f1(window_preds, window_labels) -> Optional[float]:
    """F1 over windows whose labels already follow the any-point rule."""
    c = confusion(window_preds, window_labels)
    if c["tp"] + c["fn"] == 0:
        return None
    denom = 2 * c["tp"] + c["fp"] + c["fn"]
    return 2 * c["tp"] / denom


def mar_mae(preds, labels) -> Tuple[Optional[float], Optional[float]]:
    """Missed alarm rate FN/(TP+FN) and false alarm rate FP/(TN+FP).

    The second value is reported as ``mae``; it is the share of normal windows
    predicted as attack.
    """
    c = confusion(preds, labels)
    pos = c["tp"] + c["fn"]
    neg = c["tn"] + c["fp"]
    return (c["fn"] / pos if pos else None, c["fp"] / neg if neg else None)


def roc_prc_auc(scores, labels) -> Tuple[Optional[float], Optional[float]]:
    """ROC-AUC (trapezoidal) and PRC-AUC (step-wise average precision).

    Tied scores are grouped into one threshold.
    """
    s = np.asarray(scores, dtype=float).ravel()
    y = _binary(labels, "labels")
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None, None
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last_of_group = np.r_[np.flatnonzero(np.diff(s) != 0), y.size - 1]
    tp = np.cumsum(y)[last_of_group].astype(float)
    fp = (last_of_group + 1) - tp
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    roc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1])) / 2.0)
    precision = tp / (tp + fp)
    recall = tp / n_pos
    prc = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    return roc, prc


def structural_hamming(graph_a: CausalGraph, graph_b: CausalGraph, include_lags: bool = True) -> int:
    """Edge insertions, deletions and reversals turning ``graph_a`` into ``graph_b``.

    A reversed intra-window edge counts once. Lagged edges have a fixed time
    direction, so they only count as insertions or deletions.
    """
    if graph_a.node_ids != graph_b.node_ids:
        raise ValueError("graphs are over different node sets")
    a = graph_a.intra != 0
    b = graph_b.intra != 0
    diff = a != b
    # a reversal shows up as two mismatches on (i, j) and (j, i)
    reversals = np.triu((a & b.T & ~b & ~a.T) | (a.T & b & ~a & ~b.T), k=1)
    dist = int(diff.sum()) - int(reversals.sum())
    if include_lags:
        if graph_a.max_lag != graph_b.max_lag:
            raise ValueError("graphs have different lag orders")
        dist += sum(int(((x != 0) != (y != 0)).sum()) for x, y in zip(graph_a.lags, graph_b.lags))
    return dist


@dataclass
class MetricsReport:
    point_adjusted_f1: Optional[float]
    roc_auc: Optional[float]
    prc_auc: Optional[float]
    mar: Optional[float]
    mae: Optional[float]
    confusion: Dict[str, int]
    scores: List[float] = field(default_factory=list)
    preds: List[int] = field(default_factory=list)
    labels: List[int] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(**data)


def evaluate(preds, labels, scores=None) -> MetricsReport:
    """Bundle all window-level metrics; ``scores`` default to the predictions."""
    preds = _binary(preds, "preds")
    labels = _binary(labels, "labels")
    scores = np.asarray(preds if scores is None else scores, dtype=float)
    roc, prc = roc_prc_auc(scores, labels)
    mar, mae = mar_mae(preds, labels)
    return MetricsReport(
        point_adjusted_f1(preds, labels),
        roc,
        prc,
        mar,
        mae,
        confusion(preds, labels),
        [float(s) for s in scores],
        preds.tolist(),
        labels.tolist(),
    )
