import json
from dataclasses import replace

import numpy as np
import pytest

from causaldetect.config import PipelineConfig
from causaldetect.discovery import acyclicity_value
from causaldetect.graph import CausalGraph
from causaldetect.ingest import PriorKnowledge
from causaldetect.pipeline import PipelineError, discover_windows, mean_threshold_baseline, run_pipeline, window_view
from causaldetect.synth import generate, hub_scenario


@pytest.fixture(scope="module")
def quiet():
    spec = replace(hub_scenario(seed=1), attack_episodes=[])
    sc = generate(spec, 8, 600)
    # a prior is still needed; pretend the hub was known to be exposed
    prior = PriorKnowledge({"x0"}, {"x1", "x2"})
    return sc, prior


@pytest.fixture(scope="module")
def attacked():
    sc = generate(hub_scenario(seed=2, start=6, end=9), 12, 600)
    cfg = PipelineConfig()
    return sc, cfg, discover_windows(sc.stream, cfg)


def test_stationary_stream_is_never_flagged(quiet):
    sc, prior = quiet
    res = run_pipeline(sc.stream, prior, PipelineConfig())
    assert res.triggers == []
    assert res.model is None
    assert res.report.preds == [0] * len(res.test_windows)
    assert all(rec["mode"] == "normal" for rec in res.trace)


def test_strong_attack_triggers_inside_episode(attacked):
    sc, cfg, graphs = attacked
    res = run_pipeline(sc.stream, sc.prior, cfg, graphs=graphs)
    assert res.triggers and 6 <= res.triggers[0] <= 7
    assert res.state.attack_graph.edge_count() > 0
    assert acyclicity_value(res.state.attack_graph.intra) == 0.0


def test_same_inputs_same_report(attacked):
    sc, cfg, graphs = attacked
    a = run_pipeline(sc.stream, sc.prior, cfg, graphs=graphs)
    b = run_pipeline(sc.stream, sc.prior, cfg, graphs=graphs)
    da, db = a.report.to_dict(), b.report.to_dict()
    da.pop("timings"), db.pop("timings")
    assert da == db
    assert [r.get("score") for r in a.trace] == [r.get("score") for r in b.trace]


def test_discovery_is_deterministic(quiet):
    sc, _ = quiet
    cfg = PipelineConfig()
    head = sc.stream.windows[:1]
    s = replace(sc.stream, windows=head)
    g1, g2 = discover_windows(s, cfg), discover_windows(s, cfg)
    assert g1[0].to_dict() == g2[0].to_dict()


def test_artifacts_written(attacked, tmp_path):
    sc, cfg, graphs = attacked
    res = run_pipeline(sc.stream, sc.prior, cfg, graphs=graphs, keep_history=True)
    res.save(tmp_path)
    for name in ("report.json", "trace.jsonl", "graphs.json", "attack_graph.json", "normal_graph.json", "buffer.json"):
        assert (tmp_path / name).exists(), name
    lines = (tmp_path / "trace.jsonl").read_text().splitlines()
    assert len(lines) == 12 and json.loads(lines[0])["window"] == 0
    assert len(res.state_history) == 12
    assert CausalGraph.from_json((tmp_path / "attack_graph.json").read_text()).to_dict() == res.state.attack_graph.to_dict()


def test_errors_name_their_stage(attacked):
    sc, cfg, graphs = attacked
    with pytest.raises(PipelineError) as err:
        run_pipeline(sc.stream, PriorKnowledge({"nope"}, set()), cfg, graphs=graphs)
    assert err.value.stage == "ingest"
    with pytest.raises(PipelineError, match="at least 4"):
        run_pipeline(replace(sc.stream, windows=sc.stream.windows[:3]), sc.prior, cfg, graphs=graphs[:3])
    bad = list(graphs)
    bad[3] = CausalGraph(["a", "b"], np.zeros((2, 2)), [np.zeros((2, 2))] * 2)
    with pytest.raises(PipelineError) as err:
        run_pipeline(sc.stream, sc.prior, cfg, graphs=bad)
    assert err.value.stage in ("trigger", "incremental") and err.value.window == 3


def test_window_view_caps_and_takes_magnitude():
    g = CausalGraph(["a", "b"], np.array([[0, -3.0], [0, 0]]), [np.array([[0.5, 0], [0, -0.2]])])
    v = window_view(g, 2.0)
    assert v.intra[0, 1] == 2.0 and v.lags[0][1, 1] == 0.2
    assert g.intra[0, 1] == -3.0


def test_mean_threshold_flags_spoofed_hub(attacked):
    sc, cfg, _ = attacked
    preds = mean_threshold_baseline(sc.stream)
    assert preds[6:10].all()
    assert preds[:6].sum() == 0
