"""Synthetic CPS-like streams from a linear temporal SEM with scripted attacks."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .discovery import acyclicity_value
from .graph import CausalGraph, topological_order
from .ingest import PriorKnowledge, SeriesSchema, WindowedStream, segment

PERTURBATIONS = ("mean_shift", "weight_scale", "edge_rewire")


@dataclass(frozen=True)
class AttackEpisode:
    """Attack on ``nodes`` over windows ``start`` .. ``end`` inclusive.

    ``magnitude`` is the offset for ``mean_shift`` (in units of the noise
    scale), the factor for ``weight_scale`` and the weight multiplier for the
    rewired edges of ``edge_rewire``. A mean shift is injected into the
    recorded readings of the attacked nodes (false data injection); the
    physical process keeps running on the true values.
    """

    start: int
    end: int
    nodes: Tuple[int, ...]
    kind: str = "edge_rewire"
    magnitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(n) for n in self.nodes))
        if self.kind not in PERTURBATIONS:
            raise ValueError(f"unknown perturbation {self.kind!r}")
        if self.start < 0 or self.end < self.start:
            raise ValueError("episode needs 0 <= start <= end")
        if not self.nodes:
            raise ValueError("episode must attack at least one node")


@dataclass
class ScenarioSpec:
    true_intra: np.ndarray
    true_lag: List[np.ndarray]
    noise_scale: float = 1.0
    attack_episodes: List[AttackEpisode] = field(default_factory=list)
    seed: int = 0
    node_ids: Optional[List[str]] = None

    def __post_init__(self):
        self.true_intra = np.asarray(self.true_intra, dtype=float)
        self.true_lag = [np.asarray(a, dtype=float) for a in self.true_lag]
        if self.node_ids is None:
            self.node_ids = [f"x{i}" for i in range(self.M)]

    @property
    def M(self) -> int:
        return self.true_intra.shape[0]

    @property
    def lag_order(self) -> int:
        return len(self.true_lag)

    def validate(self, n_windows: Optional[int] = None) -> None:
        m = self.M
        if self.true_intra.shape != (m, m) or any(a.shape != (m, m) for a in self.true_lag):
            raise ValueError("adjacency blocks must all be M x M")
        if len(self.node_ids) != m:
            raise ValueError("node_ids length must equal M")
        if acyclicity_value(self.true_intra) > 1e-12:
            raise ValueError("true_intra is not acyclic")
        if not self.noise_scale > 0:
            raise ValueError("noise_scale must be positive")
        eps = sorted(self.attack_episodes, key=lambda e: e.start)
        for a, b in zip(eps, eps[1:]):
            if b.start <= a.end:
                raise ValueError("attack episodes overlap")
        for e in eps:
            if any(n < 0 or n >= m for n in e.nodes):
                raise ValueError("episode attacks an unknown node")
            if n_windows is not None and e.end >= n_windows:
                raise ValueError("episode extends past the stream")
        for intra, lags in [(self.true_intra, self.true_lag)] + [self.perturbed(e)[:2] for e in eps]:
            rho = spectral_radius(intra, lags)
            if rho >= 1.0:
                raise ValueError(f"lag system is unstable (spectral radius {rho:.3f})")

    def perturbed(self, episode: AttackEpisode) -> Tuple[np.ndarray, List[np.ndarray], np.ndarray]:
        """Adjacency blocks and per-node additive offset in force during ``episode``."""
        intra = self.true_intra.copy()
        lags = [a.copy() for a in self.true_lag]
        offset = np.zeros(self.M)
        if episode.kind == "mean_shift":
            offset[list(episode.nodes)] = episode.magnitude * self.noise_scale
        elif episode.kind == "weight_scale":
            for n in episode.nodes:
                intra[n, :] *= episode.magnitude
                for a in lags:
                    own = a[n, n]
                    a[n, :] *= episode.magnitude
                    a[n, n] = own
        else:
            intra = rewire(intra, episode.nodes, episode.magnitude)
        return intra, lags, offset


def spectral_radius(intra: np.ndarray, lags: Sequence[np.ndarray]) -> float:
    """Largest eigenvalue modulus of the reduced-form VAR companion matrix."""
    m = intra.shape[0]
    p = len(lags)
    if p == 0:
        return 0.0
    inv = np.linalg.inv(np.eye(m) - intra.T)
    blocks = [inv @ a.T for a in lags]
    comp = np.zeros((m * p, m * p))
    comp[:m] = np.hstack(blocks)
    if p > 1:
        comp[m:, :-m] = np.eye(m * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def rewire(intra: np.ndarray, nodes: Sequence[int], gain: float = 1.0) -> np.ndarray:
    """Move each attacked node's outgoing intra edges to nodes it did not drive.

    New targets are taken from nodes later in the topological order, so the
    result stays acyclic. Weights are carried over and multiplied by ``gain``.
    """
    out = intra.copy()
    for n in nodes:
        order = topological_order(out)
        later = order[order.index(n) + 1 :]
        children = [j for j in later if out[n, j] != 0]
        free = [j for j in later if out[n, j] == 0 and j != n]
        if not children:
            if not free:
                raise ValueError(f"node {n} has no outgoing edge to rewire")
            out[n, free[0]] = gain * 0.8
            continue
        if not free:
            raise ValueError(f"node {n} has no free downstream target")
        weights = [out[n, j] for j in children]
        out[n, children] = 0.0
        for w, j in zip(weights, free):
            out[n, j] = gain * w
    return out


@dataclass
class Scenario:
    """Generated data plus ground truth."""

    spec: ScenarioSpec
    values: np.ndarray
    row_labels: np.ndarray
    stream: WindowedStream
    true_graphs: List[CausalGraph]
    prior: PriorKnowledge

    def to_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(self.spec.node_ids) + ["label"])
            for row, lab in zip(self.values, self.row_labels):
                w.writerow([repr(float(v)) for v in row] + [int(lab)])

    def ground_truth_dict(self) -> dict:
        return {
            "node_ids": list(self.spec.node_ids),
            "window_length": self.stream.window_length,
            "window_labels": self.stream.labels.tolist(),
            "prior": self.prior.to_dict(),
            "true_graphs": [g.to_dict() for g in self.true_graphs],
            "episodes": [
                {"start": e.start, "end": e.end, "nodes": list(e.nodes), "kind": e.kind, "magnitude": e.magnitude}
                for e in self.spec.attack_episodes
            ],
        }

    def save(self, csv_path: Union[str, Path], truth_path: Union[str, Path]) -> None:
        self.to_csv(csv_path)
        Path(truth_path).write_text(json.dumps(self.ground_truth_dict(), indent=1))


def generate(spec: ScenarioSpec, n_windows: int, k: int, burn_in: int = 200) -> Scenario:
    """Sample ``n_windows * k`` rows from the SEM, applying attack episodes.

    Each row solves ``x_t = A_X^T x_t + sum_l A_l^T x_{t-l} + e_t`` in
    topological order of the (possibly perturbed) intra graph. Mean-shift
    offsets are added to the recorded rows only.
    """
    spec.validate(n_windows)
    m, p = spec.M, spec.lag_order
    rng = np.random.default_rng(spec.seed)
    n = n_windows * k
    total = burn_in + n
    x = np.zeros((total + p, m))
    noise = rng.normal(scale=spec.noise_scale, size=(total, m))

    normal_regime = (spec.true_intra, spec.true_lag, np.zeros(m))
    regimes = [normal_regime] * n_windows
    for e in spec.attack_episodes:
        pert = spec.perturbed(e)
        for w in range(e.start, e.end + 1):
            regimes[w] = pert
    row_labels = np.zeros(n, dtype=int)
    for e in spec.attack_episodes:
        row_labels[e.start * k : (e.end + 1) * k] = 1

    cache = {}
    shift = np.zeros((total, m))
    for t in range(total):
        w = (t - burn_in) // k if t >= burn_in else None
        intra, lags, offset = regimes[w] if w is not None else normal_regime
        key = id(intra)
        if key not in cache:
            cache[key] = topological_order(intra)
        row = t + p
        shift[t] = offset
        drive = noise[t]
        for lag, a in enumerate(lags, start=1):
            drive = drive + x[row - lag] @ a
        for j in cache[key]:
            x[row, j] = drive[j] + x[row] @ intra[:, j]
    values = x[p + burn_in :] + shift[burn_in:]

    schema = SeriesSchema(tuple(spec.node_ids))
    stream = segment(values, k, row_labels, schema)

    true_graphs = []
    for intra, lags, _ in regimes:
        true_graphs.append(CausalGraph(list(spec.node_ids), intra, lags))

    attacked, impacted = set(), set()
    for e in spec.attack_episodes:
        pert_intra, pert_lags, _ = spec.perturbed(e)
        for nd in e.nodes:
            attacked.add(nd)
            for blocks in ([spec.true_intra] + spec.true_lag, [pert_intra] + pert_lags):
                for a in blocks:
                    impacted.update(int(j) for j in np.flatnonzero(a[nd]) if j != nd)
    ids = spec.node_ids
    prior = PriorKnowledge(frozenset(ids[i] for i in attacked), frozenset(ids[i] for i in impacted - attacked))
    return Scenario(spec, values, row_labels, stream, true_graphs, prior)


def random_dag(m: int, edge_prob: float, rng: np.random.Generator, low: float = 0.5, high: float = 0.9) -> np.ndarray:
    """Random upper-triangular weighted DAG with |w| in [low, high]."""
    mask = np.triu(rng.random((m, m)) < edge_prob, k=1)
    w = rng.uniform(low, high, size=(m, m)) * rng.choice([-1.0, 1.0], size=(m, m))
    return np.where(mask, w, 0.0)


def structure_scenario(seed: int = 0, m: int = 5, p: int = 2) -> ScenarioSpec:
    """Small seeded lag-``p`` SEM used for structure-recovery checks."""
    rng = np.random.default_rng(seed)
    intra = random_dag(m, 0.4, rng)
    if not np.any(intra):
        intra[0, 1] = 0.7
    lags = []
    for lag in range(1, p + 1):
        a = np.zeros((m, m))
        if lag == 1:
            np.fill_diagonal(a, rng.uniform(0.3, 0.5, size=m))
        i, j = rng.choice(m, size=2, replace=False)
        a[i, j] = rng.choice([-1.0, 1.0]) * rng.uniform(0.4, 0.6)
        lags.append(a)
    spec = ScenarioSpec(intra, lags, noise_scale=1.0, seed=seed)
    spec.validate()
    return spec


def default_scenario(seed: int = 0, n_windows: int = 60) -> ScenarioSpec:
    """8-node plant-like process with three structural attack episodes.

    The first two episodes rewire and amplify the outgoing links of the same
    controller node; the third strikes both controllers at once.
    """
    m = 8
    intra = np.zeros((m, m))
    # two cascaded stages: 0 -> 1 -> 2 -> 3 and 4 -> 5 -> 6 -> 7 with a cross link
    for i, j, w in [(0, 1, 0.8), (1, 2, 0.7), (2, 3, 0.6), (4, 5, 0.8), (5, 6, -0.7), (6, 7, 0.6), (1, 5, 0.5)]:
        intra[i, j] = w
    lag1 = np.diag(np.full(m, 0.4))
    lag2 = np.zeros((m, m))
    lag2[3, 4] = 0.3
    lag2[2, 7] = -0.3
    third = max(n_windows - 12, 3)
    episodes = [
        AttackEpisode(8, 11, (1,), "edge_rewire", 1.6),
        AttackEpisode(26, 29, (1,), "weight_scale", 2.0),
        AttackEpisode(third, third + 3, (1, 5), "edge_rewire", 1.6),
    ]
    spec = ScenarioSpec(intra, [lag1, lag2], noise_scale=1.0, attack_episodes=episodes, seed=seed)
    spec.validate(n_windows)
    return spec


def hub_scenario(seed: int = 0, start: int = 10, end: int = 29, magnitude: float = 5.0) -> ScenarioSpec:
    """One sensor feeding six loops, its reading offset by ``magnitude`` noise units.

    A spoofed reading of a node with many dependants severs all of their
    links at once, which is the kind of structural break the drift trigger is
    built to see.
    """
    m = 8
    intra = np.zeros((m, m))
    for j, w in zip(range(1, 7), [-0.611, 0.644, -0.635, -0.762, -0.655, 0.764]):
        intra[0, j] = w
    intra[1, 7] = 0.6
    lags = [np.zeros((m, m)), np.zeros((m, m))]
    episodes = [AttackEpisode(start, end, (0,), "mean_shift", magnitude)]
    spec = ScenarioSpec(intra, lags, noise_scale=1.0, attack_episodes=episodes, seed=seed)
    spec.validate(end + 1)
    return spec


def forgetting_scenario(seed: int = 0) -> ScenarioSpec:
    """Two hubs spoofed in turn: pattern A on windows 5-8, pattern B on 15-18."""
    m = 10
    intra = np.zeros((m, m))
    for j, w in zip(range(1, 5), [0.7, -0.65, 0.75, -0.6]):
        intra[0, j] = w
    for j, w in zip(range(6, 10), [-0.7, 0.65, -0.75, 0.6]):
        intra[5, j] = w
    lags = [np.zeros((m, m)), np.zeros((m, m))]
    episodes = [
        AttackEpisode(5, 8, (0,), "mean_shift", 5.0),
        AttackEpisode(15, 18, (5,), "mean_shift", 5.0),
    ]
    spec = ScenarioSpec(intra, lags, noise_scale=1.0, attack_episodes=episodes, seed=seed)
    spec.validate(22)
    return spec


# name -> factory(seed) returning (spec, n_windows, samples per window)
SCENARIOS = {
    "default": lambda seed=0: (default_scenario(seed), 60, 200),
    "structure": lambda seed=0: (structure_scenario(seed), 1, 2000),
    "hub": lambda seed=0: (hub_scenario(seed), 30, 600),
    "forgetting": lambda seed=0: (forgetting_scenario(seed), 22, 600),
}
