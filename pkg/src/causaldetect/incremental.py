"""Incremental attack/normal graph maintenance.

Edge weights handled here are magnitudes: graphs entering the incremental state
are converted with :meth:`CausalGraph.abs` so that reinforcement, capping and
Laplacians all operate on non-negative strengths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import numpy as np

from .graph import CausalGraph, is_acyclic
from .ingest import PriorKnowledge
from .trigger import histogram_from_values, js_divergence

# (source, target, lag); lag 0 is the intra-window block
EdgeKey = Tuple[str, str, int]


@dataclass
class ReplayBuffer:
    entries: Dict[EdgeKey, float] = field(default_factory=dict)
    capacity: Optional[int] = None

    def __post_init__(self):
        if self.capacity is not None and self.capacity < 1:
            raise ValueError("buffer capacity must be positive")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key) -> bool:
        return self._key(key) in self.entries

    @staticmethod
    def _key(key) -> EdgeKey:
        return (key[0], key[1], key[2] if len(key) > 2 else 0)

    def copy(self) -> "ReplayBuffer":
        return ReplayBuffer(dict(self.entries), self.capacity)

    def triples(self) -> List[Tuple[str, str, float]]:
        return [(u, v, w) for (u, v, _), w in sorted(self.entries.items())]

    def to_dict(self) -> dict:
        return {
            "capacity": self.capacity,
            "entries": [
                {"source": u, "target": v, "lag": lag, "weight": w} for (u, v, lag), w in sorted(self.entries.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReplayBuffer":
        entries = {(e["source"], e["target"], int(e.get("lag", 0))): float(e["weight"]) for e in data["entries"]}
        return cls(entries, data.get("capacity"))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ReplayBuffer":
        return cls.from_dict(json.loads(text))


def extract_attack_subgraph(graph: CausalGraph, prior: PriorKnowledge) -> CausalGraph:
    """Keep only edges whose two endpoints are attack or impact nodes."""
    keep = np.array([n in prior.nodes for n in graph.node_ids])
    mask = np.outer(keep, keep)
    sub = graph.copy()
    sub.intra = np.where(mask, sub.intra, 0.0)
    sub.lags = [np.where(mask, a, 0.0) for a in sub.lags]
    sub.diagnostics = {"empty": sub.edge_count() == 0}
    return sub


def _graph_edges(graph: CausalGraph) -> Iterable[Tuple[EdgeKey, float]]:
    for u, v, lag, w in graph.edges():
        yield (u, v, lag), w


def buffer_update(buffer: ReplayBuffer, subgraph) -> ReplayBuffer:
    """Upsert subgraph edges; over capacity, the lowest weights are evicted first.

    ``subgraph`` is a :class:`CausalGraph` or an iterable of ``(u, v, w)`` or
    ``(u, v, lag, w)`` tuples.
    """
    out = buffer.copy()
    if isinstance(subgraph, CausalGraph):
        items = list(_graph_edges(subgraph))
    else:
        items = [((t[0], t[1], t[2] if len(t) == 4 else 0), t[-1]) for t in subgraph]
    for key, w in items:
        if not np.isfinite(w):
            raise ValueError(f"non-finite weight on edge {key}")
        out.entries[key] = float(w)
    if out.capacity is not None:
        while len(out.entries) > out.capacity:
            victim = min(out.entries.items(), key=lambda kv: (kv[1], kv[0]))[0]
            del out.entries[victim]
    return out


def causal_edge_reinforcement(
    next_graph: CausalGraph, buffer: ReplayBuffer, omega: float = 2.0, w_max: float = 2.0
) -> CausalGraph:
    """Reinforce buffered edges that reappear, re-insert the ones that vanished.

    A buffered edge ``(i, j, w)`` present in ``next_graph`` gets weight
    ``min(w * omega, w_max)``; an absent one is inserted with weight ``w``.
    Every other edge is left untouched. ``omega == 1`` gives plain replay
    without reinforcement.
    """
    if omega < 1.0:
        raise ValueError("omega must be >= 1")
    g = next_graph.copy()
    pos = {n: i for i, n in enumerate(g.node_ids)}
    reinforced = inserted = 0
    for (u, v, lag), w in sorted(buffer.entries.items()):
        if u not in pos or v not in pos:
            raise ValueError(f"buffered edge {u}->{v} touches a node outside the graph")
        if lag > g.max_lag:
            raise ValueError(f"buffered edge {u}->{v} has lag {lag} beyond the graph's {g.max_lag}")
        block = g.intra if lag == 0 else g.lags[lag - 1]
        i, j = pos[u], pos[v]
        if lag == 0 and i == j:
            continue
        if block[i, j] != 0:
            block[i, j] = min(w * omega, w_max)
            reinforced += 1
        else:
            block[i, j] = min(w, w_max)
            inserted += 1
    g.diagnostics = {"reinforced": reinforced, "inserted": inserted}
    return g


def _find_cycle(adj: np.ndarray) -> Optional[List[int]]:
    """First directed cycle found by DFS in node order, as a node list."""
    m = adj.shape[0]
    color = [0] * m
    parent = [-1] * m
    for root in range(m):
        if color[root]:
            continue
        stack = [(root, iter(np.flatnonzero(adj[root])))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                continue
            nxt = int(nxt)
            if color[nxt] == 0:
                color[nxt] = 1
                parent[nxt] = node
                stack.append((nxt, iter(np.flatnonzero(adj[nxt]))))
            elif color[nxt] == 1:
                cycle = [node]
                while cycle[-1] != nxt:
                    cycle.append(parent[cycle[-1]])
                return cycle[::-1]
    return None


def remove_cycles_protected(
    graph: CausalGraph,
    protected: Iterable[str] = (),
    keep_edges: Iterable[Tuple[str, str]] = (),
) -> CausalGraph:
    """Break every intra-window cycle, sparing edges out of protected nodes.

    On each detected cycle the edge removed is, in order of preference: a
    plain edge; then an edge whose source is protected (flagged in
    ``diagnostics``); last, one listed in ``keep_edges``. Within a tier the
    lowest absolute weight goes first, ties broken by node order. The
    incremental step passes the buffered edges as ``keep_edges``: they all sit
    in the previous acyclic attack graph, so they never close a cycle among
    themselves and are never the ones cut.
    """
    g = graph.copy()
    prot = {g.index(n) for n in protected}
    pos = {n: i for i, n in enumerate(g.node_ids)}
    keep = {(pos[u], pos[v]) for u, v in keep_edges if u in pos and v in pos}
    W = g.intra
    removed, forced = [], []
    while True:
        cycle = _find_cycle(W != 0)
        if cycle is None:
            break
        cyc_edges = list(zip(cycle, cycle[1:] + cycle[:1]))

        def rank(e):
            i, j = e
            tier = 2 if (i, j) in keep else (1 if i in prot else 0)
            return (tier, abs(W[i, j]), i, j)

        i, j = min(cyc_edges, key=rank)
        if i in prot:
            forced.append((g.node_ids[i], g.node_ids[j]))
        removed.append((g.node_ids[i], g.node_ids[j], float(W[i, j])))
        W[i, j] = 0.0
    g.diagnostics = {"removed": removed, "forced_protected": forced}
    return g


@dataclass
class LaplacianView:
    degree: np.ndarray
    laplacian: np.ndarray
    normalized: np.ndarray
    adjacency: np.ndarray


def laplacian(graph: CausalGraph) -> LaplacianView:
    """Symmetrised weighted Laplacian of the intra-window block.

    ``A = (|W| + |W|^T) / 2``, ``L = D - A`` and ``L_norm = D^-1/2 L D^-1/2``
    with ``D^-1/2`` set to 0 on isolated nodes.
    """
    W = np.abs(graph.intra)
    A = 0.5 * (W + W.T)
    deg = A.sum(axis=1)
    D = np.diag(deg)
    L = D - A
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    L_norm = inv_sqrt[:, None] * L * inv_sqrt[None, :]
    return LaplacianView(D, L, L_norm, A)


def out_degrees(graph: CausalGraph, nodes: Iterable[str]) -> np.ndarray:
    """Weighted out-degree over all blocks for each of ``nodes`` (sorted)."""
    total = np.abs(graph.intra).sum(axis=1) + sum(np.abs(a).sum(axis=1) for a in graph.lags)
    return np.array([total[graph.index(n)] for n in sorted(nodes)])


@dataclass(frozen=True)
class StoppingResult:
    score: float
    divergence: float
    converged: bool
    literal_rule: bool


def stopping_score(
    sub_prev: CausalGraph,
    sub_next: CausalGraph,
    nodes: Iterable[str],
    threshold: float = 0.1,
    bins: int = 20,
    value_range: Tuple[float, float] = (0.0, 2.0),
) -> StoppingResult:
    """Compare out-degree distributions of consecutive attack subgraphs.

    Converged when the divergence ``d`` is below ``threshold``. ``score`` is
    ``1 - d``; ``literal_rule`` records ``score < threshold`` for auditing.
    """
    if sub_prev.node_ids != sub_next.node_ids:
        raise ValueError("subgraphs are over different node sets")
    nodes = list(nodes)
    hp = histogram_from_values(out_degrees(sub_prev, nodes), bins, value_range, pseudo_count=0.0)
    hn = histogram_from_values(out_degrees(sub_next, nodes), bins, value_range, pseudo_count=0.0)
    d = js_divergence(hp, hn)
    s = 1.0 - d
    return StoppingResult(s, d, d < threshold, s < threshold)


@dataclass
class IncrementalConfig:
    omega: float = 2.0
    stop_threshold: float = 0.1
    w_max: float = 2.0
    buffer_capacity: Optional[int] = None
    bins: int = 20
    use_buffer: bool = True
    use_cer: bool = True

    def __post_init__(self):
        if not self.omega > 1.0:
            raise ValueError("omega must exceed 1")
        if not 0.0 < self.stop_threshold < 1.0:
            raise ValueError("stop_threshold must lie in (0, 1)")
        if not self.w_max > 0:
            raise ValueError("w_max must be positive")


@dataclass
class IncrementalState:
    attack_graph: CausalGraph
    normal_graph: CausalGraph
    buffer: ReplayBuffer
    config: IncrementalConfig = field(default_factory=IncrementalConfig)
    converged: bool = False
    last_subgraph: Optional[CausalGraph] = None
    steps: int = 0
    diagnostics: Dict = field(default_factory=dict)

    @classmethod
    def initial(cls, node_ids, max_lag: int, config: Optional[IncrementalConfig] = None) -> "IncrementalState":
        config = config or IncrementalConfig()
        return cls(
            CausalGraph.empty(node_ids, max_lag),
            CausalGraph.empty(node_ids, max_lag),
            ReplayBuffer(capacity=config.buffer_capacity),
            config,
        )

    def copy(self) -> "IncrementalState":
        return replace(
            self,
            attack_graph=self.attack_graph.copy(),
            normal_graph=self.normal_graph.copy(),
            buffer=self.buffer.copy(),
            last_subgraph=None if self.last_subgraph is None else self.last_subgraph.copy(),
            diagnostics=dict(self.diagnostics),
        )

    def begin_episode(self) -> None:
        """Forget the previous subgraph so the stopping test restarts."""
        self.last_subgraph = None
        self.converged = False


def exclude_nodes(graph: CausalGraph, nodes: Iterable[str]) -> CausalGraph:
    """Zero every edge with at least one endpoint in ``nodes``."""
    g = graph.copy()
    hit = np.array([n in set(nodes) for n in g.node_ids])
    mask = hit[:, None] | hit[None, :]
    g.intra = np.where(mask, 0.0, g.intra)
    g.lags = [np.where(mask, 0.0, a) for a in g.lags]
    return g


def incremental_step(
    state: IncrementalState,
    new_window_graph: CausalGraph,
    prior: PriorKnowledge,
    status: str = "attack",
) -> IncrementalState:
    """Fold one window graph into the attack or normal graph.

    Returns a new state; ``state`` is not modified.
    """
    if status not in ("attack", "normal"):
        raise ValueError("status must be 'attack' or 'normal'")
    cfg = state.config
    out = state.copy()
    g = new_window_graph.abs()
    g.intra = np.minimum(g.intra, cfg.w_max)
    g.lags = [np.minimum(a, cfg.w_max) for a in g.lags]

    if status == "normal":
        g = remove_cycles_protected(exclude_nodes(g, prior.nodes))
        g.diagnostics = {}
        out.normal_graph = g
        out.diagnostics = {"status": "normal", "edges": g.edge_count()}
        return out

    # convergence is judged on the window's own attack evidence; the reinforced
    # graph keeps growing under repeated input and would never settle
    evidence = extract_attack_subgraph(g, prior)
    diag = {"status": "attack", "reinforced": 0, "inserted": 0}
    if cfg.use_buffer and len(out.buffer):
        g = causal_edge_reinforcement(g, out.buffer, cfg.omega if cfg.use_cer else 1.0, cfg.w_max)
        diag.update(g.diagnostics)
    keep = [(u, v) for (u, v, lag) in out.buffer.entries if lag == 0] if cfg.use_buffer else []
    g = remove_cycles_protected(g, prior.attack_nodes & set(g.node_ids), keep)
    diag["removed_for_cycles"] = len(g.diagnostics["removed"])
    diag["forced_protected"] = len(g.diagnostics["forced_protected"])
    g.diagnostics = {}
    sub = extract_attack_subgraph(g, prior)
    if cfg.use_buffer:
        out.buffer = buffer_update(out.buffer, sub)
    if out.last_subgraph is None:
        out.converged = False
        diag.update({"score": None, "divergence": None})
    else:
        res = stopping_score(out.last_subgraph, evidence, prior.nodes, cfg.stop_threshold, cfg.bins, (0.0, cfg.w_max))
        out.converged = res.converged
        diag.update({"score": res.score, "divergence": res.divergence, "literal_rule": res.literal_rule})
    out.attack_graph = g
    out.last_subgraph = evidence
    out.steps += 1
    diag.update({"edges": g.edge_count(), "subgraph_edges": sub.edge_count(), "converged": out.converged})
    out.diagnostics = diag
    return out
