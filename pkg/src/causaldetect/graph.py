"""Weighted temporal causal graph container and its JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np


@dataclass
class CausalGraph:
    """Intra-window adjacency plus one M x M block per time lag.

    ``intra[i, j]`` is the weight of edge ``node_ids[i] -> node_ids[j]`` inside a
    window; ``lags[l - 1][i, j]`` is the edge from node ``i`` at ``t - l`` to
    node ``j`` at ``t``.
    """

    node_ids: List[str]
    intra: np.ndarray
    lags: List[np.ndarray] = field(default_factory=list)
    edge_threshold: float = 0.0
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.node_ids = [str(n) for n in self.node_ids]
        self.intra = np.asarray(self.intra, dtype=float)
        self.lags = [np.asarray(a, dtype=float) for a in self.lags]
        m = len(self.node_ids)
        if len(set(self.node_ids)) != m:
            raise ValueError("node_ids must be unique")
        if self.intra.shape != (m, m):
            raise ValueError(f"intra adjacency must be {m}x{m}, got {self.intra.shape}")
        for a in self.lags:
            if a.shape != (m, m):
                raise ValueError(f"lag adjacency must be {m}x{m}, got {a.shape}")
        if not np.all(np.isfinite(self.intra)) or any(not np.all(np.isfinite(a)) for a in self.lags):
            raise ValueError("graph weights must be finite")

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def max_lag(self) -> int:
        return len(self.lags)

    @classmethod
    def empty(cls, node_ids: Sequence[str], max_lag: int = 0) -> "CausalGraph":
        m = len(node_ids)
        return cls(list(node_ids), np.zeros((m, m)), [np.zeros((m, m)) for _ in range(max_lag)])

    def copy(self) -> "CausalGraph":
        return CausalGraph(
            list(self.node_ids),
            self.intra.copy(),
            [a.copy() for a in self.lags],
            self.edge_threshold,
            dict(self.diagnostics),
        )

    def index(self, node: str) -> int:
        return self.node_ids.index(node)

    def all_weights(self) -> np.ndarray:
        """Nonzero weights of every block, intra first."""
        blocks = [self.intra] + self.lags
        return np.concatenate([b[b != 0] for b in blocks]) if blocks else np.zeros(0)

    def intra_edges(self) -> List[Tuple[str, str, float]]:
        rows, cols = np.nonzero(self.intra)
        return [(self.node_ids[i], self.node_ids[j], float(self.intra[i, j])) for i, j in zip(rows, cols)]

    def edges(self) -> List[Tuple[str, str, int, float]]:
        """All edges as ``(source, target, lag, weight)``; lag 0 is intra-window."""
        out = [(u, v, 0, w) for u, v, w in self.intra_edges()]
        for lag, a in enumerate(self.lags, start=1):
            rows, cols = np.nonzero(a)
            out.extend((self.node_ids[i], self.node_ids[j], lag, float(a[i, j])) for i, j in zip(rows, cols))
        return out

    def edge_count(self) -> int:
        return int(np.count_nonzero(self.intra) + sum(np.count_nonzero(a) for a in self.lags))

    def with_intra(self, intra: np.ndarray) -> "CausalGraph":
        g = self.copy()
        g.intra = np.asarray(intra, dtype=float)
        return g

    def abs(self) -> "CausalGraph":
        g = self.copy()
        g.intra = np.abs(g.intra)
        g.lags = [np.abs(a) for a in g.lags]
        return g

    def to_dict(self) -> Dict[str, Any]:
        return {
            "node_ids": list(self.node_ids),
            "max_lag": self.max_lag,
            "edge_threshold": float(self.edge_threshold),
            "edges": [
                {"source": u, "target": v, "type": "intra" if lag == 0 else f"lag-{lag}", "weight": w}
                for u, v, lag, w in self.edges()
            ],
            "diagnostics": _jsonable(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CausalGraph":
        node_ids = list(data["node_ids"])
        g = cls.empty(node_ids, int(data.get("max_lag", 0)))
        g.edge_threshold = float(data.get("edge_threshold", 0.0))
        g.diagnostics = dict(data.get("diagnostics", {}))
        pos = {n: i for i, n in enumerate(node_ids)}
        for e in data["edges"]:
            i, j = pos[e["source"]], pos[e["target"]]
            kind = e["type"]
            if kind == "intra":
                g.intra[i, j] = float(e["weight"])
            elif kind.startswith("lag-"):
                g.lags[int(kind[4:]) - 1][i, j] = float(e["weight"])
            else:
                raise ValueError(f"unknown edge type {kind!r}")
        return g

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "CausalGraph":
        return cls.from_dict(json.loads(text))

    def same_state(self, other: "CausalGraph", atol: float = 0.0) -> bool:
        """Structural and numerical equality (diagnostics ignored)."""
        if self.node_ids != other.node_ids or self.max_lag != other.max_lag:
            return False
        if self.edge_threshold != other.edge_threshold:
            return False
        pairs = zip([self.intra] + self.lags, [other.intra] + other.lags)
        return all(np.allclose(a, b, rtol=0.0, atol=atol) for a, b in pairs)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def is_acyclic(adjacency: np.ndarray) -> bool:
    """Kahn's algorithm on the nonzero pattern."""
    a = np.asarray(adjacency) != 0
    m = a.shape[0]
    indeg = a.sum(axis=0).astype(int)
    stack = [i for i in range(m) if indeg[i] == 0]
    seen = 0
    while stack:
        i = stack.pop()
        seen += 1
        for j in np.flatnonzero(a[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                stack.append(j)
    return seen == m


def topological_order(adjacency: np.ndarray) -> Optional[List[int]]:
    a = np.asarray(adjacency) != 0
    m = a.shape[0]
    indeg = a.sum(axis=0).astype(int)
    ready = sorted(i for i in range(m) if indeg[i] == 0)
    order = []
    while ready:
        i = ready.pop(0)
        order.append(i)
        for j in np.flatnonzero(a[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
        ready.sort()
    return order if len(order) == m else None


def edge_set(graph: CausalGraph, include_lags: bool = True) -> Iterable[Tuple[int, int, int]]:
    out = {(0, int(i), int(j)) for i, j in zip(*np.nonzero(graph.intra))}
    if include_lags:
        for lag, a in enumerate(graph.lags, start=1):
            out |= {(lag, int(i), int(j)) for i, j in zip(*np.nonzero(a))}
    return out
