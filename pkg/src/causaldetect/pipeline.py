"""End-to-end driver: discovery, trigger, incremental graphs, classifier, metrics."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .config import PipelineConfig
from .discovery import discover
from .gcn import GcnModel, GraphSample, featurize, forward, train
from .graph import CausalGraph
from .incremental import IncrementalState, incremental_step
from .ingest import PriorKnowledge, WindowedStream
from .metrics import MetricsReport, evaluate
from .trigger import TriggerState, check_trigger

logger = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    def __init__(self, stage: str, window: Optional[int], cause: Exception):
        where = f" at window {window}" if window is not None else ""
        super().__init__(f"[{stage}]{where}: {cause}")
        self.stage = stage
        self.window = window


@dataclass
class PipelineResult:
    report: MetricsReport
    trace: List[dict]
    window_graphs: List[CausalGraph]
    state: IncrementalState
    model: Optional[GcnModel]
    test_windows: List[int]
    triggers: List[int] = field(default_factory=list)
    state_history: List[IncrementalState] = field(default_factory=list)

    def save(self, out_dir: Union[str, Path]) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.report.to_json(indent=1))
        with (out / "trace.jsonl").open("w") as fh:
            for rec in self.trace:
                fh.write(json.dumps(rec) + "\n")
        (out / "graphs.json").write_text(json.dumps([g.to_dict() for g in self.window_graphs]))
        (out / "attack_graph.json").write_text(self.state.attack_graph.to_json(indent=1))
        (out / "normal_graph.json").write_text(self.state.normal_graph.to_json(indent=1))
        (out / "buffer.json").write_text(self.state.buffer.to_json(indent=1))
        if self.model is not None:
            self.model.save(out / "model.json")


def window_view(graph: CausalGraph, w_max: float) -> CausalGraph:
    """Magnitude graph with weights capped at ``w_max``, as the classifier sees it."""
    g = graph.abs()
    g.intra = np.minimum(g.intra, w_max)
    g.lags = [np.minimum(a, w_max) for a in g.lags]
    return g


def _stage(name, window=None):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(name, window, exc) from exc
            return False

    return _Ctx()


def discover_windows(stream: WindowedStream, config: PipelineConfig) -> List[CausalGraph]:
    lag = config.max_lag if config.use_lags else 0
    names = list(stream.schema.feature_names)
    graphs = []
    for w in stream:
        with _stage("discovery", w.index):
            g = discover(w.data, lag, config.discovery, names)
            if lag < config.max_lag:
                # keep the lag layout uniform so buffers and views line up across ablations
                m = len(names)
                g.lags = g.lags + [np.zeros((m, m)) for _ in range(config.max_lag - lag)]
            graphs.append(g)
    return graphs


def run_pipeline(
    stream: WindowedStream,
    prior: PriorKnowledge,
    config: Optional[PipelineConfig] = None,
    graphs: Optional[Sequence[CausalGraph]] = None,
    keep_history: bool = False,
) -> PipelineResult:
    """Process a labelled stream window by window and score the held-out tail.

    The first ``train_fraction`` of windows, together with the incremental
    attack and normal graphs at the end of that span, train the classifier;
    metrics are computed on the remaining windows. Each window is classified
    from its own magnitude graph (see :func:`window_view`). Pre-fitted
    ``graphs`` may be passed to skip discovery.
    """
    config = config or PipelineConfig()
    labels = stream.labels
    if labels is None:
        raise PipelineError("ingest", None, ValueError("stream windows need labels"))
    if len(stream) < 4:
        raise PipelineError("ingest", None, ValueError("need at least 4 windows"))
    with _stage("ingest"):
        prior.validate(stream.schema)
    timings: Dict[str, float] = {}
    names = list(stream.schema.feature_names)

    t0 = time.perf_counter()
    if graphs is None:
        graphs = discover_windows(stream, config)
    graphs = list(graphs)
    timings["discovery"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    tcfg, icfg = config.trigger, config.incremental
    trig = TriggerState(tcfg.similarity_threshold, tcfg.bins, (0.0, tcfg.w_max), tcfg.pseudo_count)
    state = IncrementalState.initial(names, config.max_lag, icfg)
    n_train = max(2, int(round(config.train_fraction * len(stream))))
    n_train = min(n_train, len(stream) - 1)
    mode = "normal"
    trace, triggers, history = [], [], []
    train_state = None
    for t, g in enumerate(graphs):
        rec = {"window": t, "label": int(labels[t]), "edges": g.edge_count(), "h": g.diagnostics.get("h")}
        with _stage("trigger", t):
            if mode == "normal":
                ev = check_trigger(trig, g, t)
                rec["similarity"] = trig.last_similarity
                if ev is not None:
                    triggers.append(t)
                    rec["trigger"] = json.loads(ev.to_json())
                    logger.info(ev.to_json())
                    mode = "attack"
                    state.begin_episode()
        with _stage("incremental", t):
            state = incremental_step(state, g, prior, mode)
        rec["mode"] = mode
        rec["incremental"] = state.diagnostics
        if mode == "attack" and state.converged:
            mode = "normal"
            # the next window becomes the new trigger reference
            trig.reset(None)
        trace.append(rec)
        if keep_history:
            history.append(state.copy())
        if t == n_train - 1:
            train_state = state.copy()
    timings["incremental"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    views = [window_view(g, icfg.w_max) for g in graphs]
    samples = [featurize(views[t], prior.nodes, int(labels[t])) for t in range(n_train)]
    if train_state.attack_graph.edge_count():
        samples.append(featurize(train_state.attack_graph, prior.nodes, 1))
        samples.append(featurize(train_state.normal_graph, prior.nodes, 0))
    model = None
    with _stage("classifier"):
        if {s.label for s in samples} == {0, 1}:
            model = train(samples, config.classifier)
    timings["training"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    test = list(range(n_train, len(stream)))
    scores = []
    for t in test:
        if model is None:
            # single-class training data: every window is judged normal
            scores.append(0.0)
        else:
            scores.append(forward(model, featurize(views[t], prior.nodes)))
        trace[t]["score"] = scores[-1]
    preds = [int(s >= config.classify_threshold) for s in scores]
    for t, p in zip(test, preds):
        trace[t]["pred"] = p
    timings["inference"] = time.perf_counter() - t0
    report = evaluate(preds, labels[test], scores)
    report.timings = timings
    return PipelineResult(report, trace, graphs, state, model, test, triggers, history)


def mean_threshold_baseline(stream: WindowedStream, n_sigma: float = 3.0, train_fraction: float = 0.4) -> np.ndarray:
    """Flag a window when any feature's window mean leaves ``n_sigma`` bands.

    Features are standardised with statistics of the training span; a window
    mean is flagged when it deviates from that span's mean of window means by
    more than ``n_sigma`` of their standard deviation.
    """
    rows = stream.rows()
    n_train = max(2, int(round(train_fraction * len(stream))))
    ref = rows[: n_train * stream.window_length]
    sd = ref.std(axis=0)
    sd[sd == 0] = 1.0
    z = (rows - ref.mean(axis=0)) / sd
    means = z.reshape(len(stream), stream.window_length, -1).mean(axis=1)
    mu = means[:n_train].mean(axis=0)
    spread = means[:n_train].std(axis=0)
    spread[spread == 0] = 1.0
    return (np.abs(means - mu) > n_sigma * spread).any(axis=1).astype(int)
