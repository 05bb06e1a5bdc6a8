"""Early symptom trigger: edge-weight distribution drift between window graphs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .graph import CausalGraph


@dataclass(frozen=True)
class EdgeWeightHistogram:
    bin_edges: np.ndarray
    probabilities: np.ndarray
    counts: np.ndarray
    empty: bool = False

    @property
    def bin_count(self) -> int:
        return self.probabilities.shape[0]


def histogram_from_values(
    values, bins: int = 20, value_range: Tuple[float, float] = (0.0, 2.0), pseudo_count: float = 1.0
) -> EdgeWeightHistogram:
    """Laplace-smoothed histogram of ``values`` over fixed, equal-width bins.

    Values outside the range are clamped into the end bins; a value sitting on
    an interior edge belongs to the bin on its right.
    """
    lo, hi = map(float, value_range)
    if bins < 2:
        raise ValueError("need at least 2 bins")
    if not lo < hi:
        raise ValueError("histogram range must satisfy lo < hi")
    values = np.asarray(values, dtype=float).ravel()
    edges = np.linspace(lo, hi, bins + 1)
    idx = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(float)
    smoothed = counts + pseudo_count
    total = smoothed.sum()
    if total <= 0:
        # pseudo_count 0 and no values: nothing to normalise, fall back to uniform
        probs = np.full(bins, 1.0 / bins)
    else:
        probs = smoothed / total
    return EdgeWeightHistogram(edges, probs, counts, empty=values.size == 0)


def edge_weight_histogram(
    graph: CausalGraph, bins: int = 20, value_range: Tuple[float, float] = (0.0, 2.0), pseudo_count: float = 1.0
) -> EdgeWeightHistogram:
    """Distribution of absolute nonzero edge weights over intra and lag blocks."""
    return histogram_from_values(np.abs(graph.all_weights()), bins, value_range, pseudo_count)


def _kl2(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def js_divergence(P, Q) -> float:
    """Base-2 Jensen-Shannon divergence, in [0, 1].

    Accepts two :class:`EdgeWeightHistogram` objects with identical bins or two
    probability vectors of equal length.
    """
    if isinstance(P, EdgeWeightHistogram) and isinstance(Q, EdgeWeightHistogram):
        if P.bin_edges.shape != Q.bin_edges.shape or not np.array_equal(P.bin_edges, Q.bin_edges):
            raise ValueError("histograms have different bin edges")
    p = np.asarray(getattr(P, "probabilities", P), dtype=float)
    q = np.asarray(getattr(Q, "probabilities", Q), dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions have different lengths")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("probabilities must be non-negative")
    p = p / p.sum()
    q = q / q.sum()
    m = 0.5 * (p + q)
    js = 0.5 * _kl2(p, m) + 0.5 * _kl2(q, m)
    return float(min(max(js, 0.0), 1.0))


def similarity(g_prev: CausalGraph, g_next: CausalGraph, bins: int = 20,
               value_range: Tuple[float, float] = (0.0, 2.0), pseudo_count: float = 1.0) -> float:
    """``1 - JS`` between the edge-weight distributions of two graphs."""
    if g_prev.node_ids != g_next.node_ids:
        raise ValueError("graphs are over different node sets")
    hp = edge_weight_histogram(g_prev, bins, value_range, pseudo_count)
    hn = edge_weight_histogram(g_next, bins, value_range, pseudo_count)
    return 1.0 - js_divergence(hp, hn)


@dataclass(frozen=True)
class TriggerEvent:
    window: int
    similarity: float
    threshold: float

    def to_json(self) -> str:
        return json.dumps({"event": "trigger", "window": self.window,
                           "similarity": self.similarity, "threshold": self.threshold})


@dataclass
class TriggerState:
    """Reference graph and settings for the similarity trigger.

    The trigger fires when the similarity to the reference drops *below*
    ``threshold``. While no trigger fires the reference follows the stream.
    """

    threshold: float = 0.9
    bins: int = 20
    value_range: Tuple[float, float] = (0.0, 2.0)
    pseudo_count: float = 1.0
    last_graph: Optional[CausalGraph] = None
    fired_at: Optional[int] = None
    last_similarity: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("similarity threshold must lie in (0, 1)")

    def reset(self, graph: Optional[CausalGraph] = None) -> None:
        self.last_graph = graph
        self.fired_at = None
        self.last_similarity = None


def check_trigger(state: TriggerState, new_graph: CausalGraph, window_index: int) -> Optional[TriggerEvent]:
    """Compare ``new_graph`` with the reference; return an event when it fires."""
    if state.last_graph is None:
        state.last_graph = new_graph
        state.last_similarity = None
        return None
    sim = similarity(state.last_graph, new_graph, state.bins, state.value_range, state.pseudo_count)
    state.last_similarity = sim
    if sim < state.threshold:
        state.fired_at = window_index
        return TriggerEvent(window_index, sim, state.threshold)
    state.last_graph = new_graph
    return None
