"""Three-layer graph convolutional classifier with hand-written gradients.

Each layer computes ``H' = relu(L_agg @ H @ W)``; the graph is read out by a
mean over nodes followed by a linear map and a sigmoid. Training minimises
mean binary cross-entropy with Adam over the full batch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .graph import CausalGraph
from .incremental import laplacian

EPS = 1e-7
FORMAT_VERSION = 1


@dataclass
class GraphSample:
    aggregation: np.ndarray
    features: np.ndarray
    label: Optional[int] = None

    def __post_init__(self):
        self.aggregation = np.asarray(self.aggregation, dtype=float)
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2 or self.features.shape[1] < 1:
            raise ValueError("features must be an M x F matrix with F >= 1")
        m = self.features.shape[0]
        if self.aggregation.shape != (m, m):
            raise ValueError("aggregation must be M x M")
        if not (np.all(np.isfinite(self.aggregation)) and np.all(np.isfinite(self.features))):
            raise ValueError("sample holds non-finite values")
        if not np.allclose(self.aggregation, self.aggregation.T, atol=1e-9, rtol=0):
            raise ValueError("aggregation operator must be symmetric")
        if self.label is not None and self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")

    def with_label(self, label: int) -> "GraphSample":
        return GraphSample(self.aggregation, self.features, label)


def featurize(graph: CausalGraph, prior_nodes: Iterable[str] = (), label: Optional[int] = None) -> GraphSample:
    """Aggregation ``I - L_norm`` and node features [in-degree, out-degree, prior flag].

    Degrees are sums of absolute weights over the intra and lag blocks.
    """
    view = laplacian(graph)
    agg = np.eye(graph.n_nodes) - view.normalized
    agg = 0.5 * (agg + agg.T)
    blocks = [np.abs(graph.intra)] + [np.abs(a) for a in graph.lags]
    total = sum(blocks)
    prior = set(prior_nodes)
    flags = np.array([1.0 if n in prior else 0.0 for n in graph.node_ids])
    feats = np.column_stack([total.sum(axis=0), total.sum(axis=1), flags])
    return GraphSample(agg, feats, label)


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 200
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    hidden: int = 16
    dropout: float = 0.2

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.hidden < 1:
            raise ValueError("hidden width must be positive")


PARAM_NAMES = ("W0", "W1", "W2", "readout", "bias")


@dataclass
class GcnModel:
    params: Dict[str, np.ndarray]
    dropout: float = 0.2
    loss_trace: List[float] = field(default_factory=list)

    def __post_init__(self):
        f, h = self.params["W0"].shape
        if self.params["W1"].shape != (h, h) or self.params["W2"].shape != (h, h):
            raise ValueError("hidden layers must be h x h")
        if self.params["readout"].shape != (h,):
            raise ValueError("readout must have length h")
        self.params["bias"] = np.asarray(self.params.get("bias", 0.0), dtype=float).reshape(())

    @property
    def hidden(self) -> int:
        return self.params["W0"].shape[1]

    @property
    def n_features(self) -> int:
        return self.params["W0"].shape[0]

    @classmethod
    def zeros(cls, n_features: int = 3, hidden: int = 16, dropout: float = 0.2) -> "GcnModel":
        return cls(
            {
                "W0": np.zeros((n_features, hidden)),
                "W1": np.zeros((hidden, hidden)),
                "W2": np.zeros((hidden, hidden)),
                "readout": np.zeros(hidden),
                "bias": np.zeros(()),
            },
            dropout,
        )

    @classmethod
    def init(cls, n_features: int, hidden: int, dropout: float, rng: np.random.Generator) -> "GcnModel":
        def glorot(a, b):
            lim = np.sqrt(6.0 / (a + b))
            return rng.uniform(-lim, lim, size=(a, b))

        return cls(
            {
                "W0": glorot(n_features, hidden),
                "W1": glorot(hidden, hidden),
                "W2": glorot(hidden, hidden),
                "readout": glorot(hidden, 1).ravel(),
                "bias": np.zeros(()),
            },
            dropout,
        )

    def copy(self) -> "GcnModel":
        return GcnModel({k: v.copy() for k, v in self.params.items()}, self.dropout, list(self.loss_trace))

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "dropout": self.dropout,
            "shapes": {k: list(v.shape) for k, v in self.params.items()},
            "params": {k: np.asarray(v).ravel().tolist() for k, v in self.params.items()},
            "loss_trace": list(self.loss_trace),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GcnModel":
        if data.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {data.get('format_version')!r}")
        params = {
            k: np.asarray(data["params"][k], dtype=float).reshape(data["shapes"][k]) for k in PARAM_NAMES
        }
        return cls(params, float(data["dropout"]), list(data.get("loss_trace", [])))

    def save(self, path: Union[str, Path]) -> None:
        """JSON dump, or a binary ``.npz`` when the suffix says so."""
        path = Path(path)
        if path.suffix == ".npz":
            np.savez(path, format_version=FORMAT_VERSION, dropout=self.dropout,
                     loss_trace=np.asarray(self.loss_trace), **self.params)
        else:
            path.write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GcnModel":
        path = Path(path)
        if path.suffix == ".npz":
            with np.load(path) as z:
                if int(z["format_version"]) != FORMAT_VERSION:
                    raise ValueError("unsupported model format")
                return cls({k: z[k].copy() for k in PARAM_NAMES}, float(z["dropout"]), z["loss_trace"].tolist())
        return cls.from_dict(json.loads(path.read_text()))


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def _forward(params, sample: GraphSample, masks=None):
    A = sample.aggregation
    H = sample.features
    cache = []
    for i, name in enumerate(("W0", "W1", "W2")):
        AH = A @ H
        S = AH @ params[name]
        H = np.maximum(S, 0.0)
        if masks is not None and i < 2:
            H = H * masks[i]
        cache.append((AH, S))
    pooled = H.mean(axis=0)
    z = float(pooled @ params["readout"] + params["bias"])
    return _sigmoid(z), z, pooled, cache


def forward(model: GcnModel, sample: GraphSample) -> float:
    """Attack probability of one graph (inference mode, no dropout)."""
    if sample.features.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {sample.features.shape[1]}")
    return float(_forward(model.params, sample)[0])


def bce_loss(p, y) -> float:
    """Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7]."""
    p = np.clip(np.asarray(p, dtype=float), EPS, 1.0 - EPS)
    y = np.asarray(y, dtype=float)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def loss_and_grads(params, samples: Sequence[GraphSample], masks=None) -> Tuple[float, Dict[str, np.ndarray]]:
    """Mean clamped BCE over ``samples`` and its exact gradient."""
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    n = len(samples)
    total = 0.0
    for idx, s in enumerate(samples):
        mk = masks[idx] if masks is not None else None
        p, z, pooled, cache = _forward(params, s, mk)
        y = float(s.label)
        total += bce_loss(p, y)
        if p < EPS or p > 1.0 - EPS:
            continue  # loss is flat where the clamp is active
        dz = (p - y) / n
        grads["readout"] += pooled * dz
        grads["bias"] += dz
        m = s.features.shape[0]
        dH = np.outer(np.full(m, 1.0 / m), params["readout"] * dz)
        A = s.aggregation
        for i, name in reversed(list(enumerate(("W0", "W1", "W2")))):
            if mk is not None and i < 2:
                dH = dH * mk[i]
            AH, S = cache[i]
            dS = dH * (S > 0)
            grads[name] += AH.T @ dS
            if i > 0:
                dH = A.T @ (dS @ params[name].T)
    return total / n, grads


def train(samples: Sequence[GraphSample], config: Optional[TrainConfig] = None,
          model: Optional[GcnModel] = None) -> GcnModel:
    """Full-batch Adam on mean BCE; reproducible for a fixed seed."""
    config = config or TrainConfig()
    samples = list(samples)
    if len(samples) < 2:
        raise ValueError("need at least 2 samples")
    labels = {s.label for s in samples}
    if None in labels:
        raise ValueError("every training sample needs a label")
    if labels != {0, 1}:
        raise ValueError("training needs both classes")
    rng = np.random.default_rng(config.seed)
    n_feat = samples[0].features.shape[1]
    model = model.copy() if model is not None else GcnModel.init(n_feat, config.hidden, config.dropout, rng)
    params = model.params
    m1 = {k: np.zeros_like(v) for k, v in params.items()}
    m2 = {k: np.zeros_like(v) for k, v in params.items()}
    trace = []
    keep = 1.0 - model.dropout
    for epoch in range(1, config.epochs + 1):
        masks = None
        if model.dropout > 0:
            masks = [
                [(rng.random((s.features.shape[0], model.hidden)) < keep) / keep for _ in range(2)]
                for s in samples
            ]
        loss, grads = loss_and_grads(params, samples, masks)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss at epoch {epoch}; last finite losses {trace[-3:]}")
        trace.append(loss)
        b1, b2 = config.beta1, config.beta2
        for k in PARAM_NAMES:
            g = grads[k]
            m1[k] = b1 * m1[k] + (1 - b1) * g
            m2[k] = b2 * m2[k] + (1 - b2) * g * g
            mhat = m1[k] / (1 - b1 ** epoch)
            vhat = m2[k] / (1 - b2 ** epoch)
            params[k] = params[k] - config.learning_rate * mhat / (np.sqrt(vhat) + config.epsilon)
        if not all(np.all(np.isfinite(v)) for v in params.values()):
            raise FloatingPointError(f"weights became non-finite at epoch {epoch}")
    model.loss_trace = trace
    return model


def classify(model: GcnModel, graph: Union[CausalGraph, GraphSample], threshold: float = 0.5,
             prior_nodes: Iterable[str] = ()) -> Tuple[int, float]:
    """``(label, probability)``; label is 1 when probability >= threshold."""
    sample = graph if isinstance(graph, GraphSample) else featurize(graph, prior_nodes)
    p = forward(model, sample)
    return int(p >= threshold), p
