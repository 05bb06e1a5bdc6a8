import json

import numpy as np
import pytest

from causaldetect.discovery import acyclicity_value, discover
from causaldetect.ingest import load_csv
from causaldetect.metrics import structural_hamming
from causaldetect.synth import (
    SCENARIOS,
    AttackEpisode,
    ScenarioSpec,
    default_scenario,
    forgetting_scenario,
    generate,
    hub_scenario,
    rewire,
    spectral_radius,
    structure_scenario,
)


def chain_spec(episodes=(), seed=0):
    intra = np.zeros((4, 4))
    intra[0, 1], intra[1, 2], intra[2, 3] = 0.8, -0.6, 0.5
    lag = np.diag([0.3, 0.3, 0.3, 0.3])
    return ScenarioSpec(intra, [lag], 1.0, list(episodes), seed)


def test_no_episodes_all_normal():
    sc = generate(chain_spec(), 6, 50)
    assert sc.stream.labels.tolist() == [0] * 6
    assert sc.values.shape == (300, 4)
    assert sc.prior.nodes == frozenset()


def test_episode_labels_windows_exactly():
    sc = generate(chain_spec([AttackEpisode(5, 7, (1,), "edge_rewire", 1.0)]), 10, 20)
    assert sc.stream.labels.tolist() == [0] * 5 + [1] * 3 + [0] * 2
    assert sc.row_labels.sum() == 60


def test_mean_shift_moves_the_reading():
    spec = chain_spec([AttackEpisode(4, 7, (1,), "mean_shift", 5.0)])
    sc = generate(spec, 8, 200)
    inside = sc.values[800:, 1].mean()
    outside = sc.values[:800, 1].mean()
    assert inside - outside >= 3.0
    # the reading is spoofed, the process downstream is not
    assert abs(sc.values[800:, 2].mean() - sc.values[:800, 2].mean()) < 1.0


def test_prior_is_attacked_plus_children():
    sc = generate(chain_spec([AttackEpisode(1, 2, (1,), "weight_scale", 2.0)]), 4, 30)
    assert sc.prior.attack_nodes == {"x1"}
    assert sc.prior.impact_nodes == {"x2"}


def test_rewire_keeps_graph_acyclic():
    spec = default_scenario(0)
    out = rewire(spec.true_intra, (1, 5), 1.6)
    assert acyclicity_value(out) == 0.0
    assert not np.array_equal(np.flatnonzero(out[1]), np.flatnonzero(spec.true_intra[1]))


def test_validation_errors():
    bad = chain_spec()
    bad.true_intra[3, 0] = 0.5
    with pytest.raises(ValueError):
        bad.validate()
    with pytest.raises(ValueError):
        chain_spec([AttackEpisode(1, 3, (0,)), AttackEpisode(3, 4, (1,))]).validate()
    with pytest.raises(ValueError):
        generate(chain_spec([AttackEpisode(1, 9, (0,))]), 5, 10)
    unstable = chain_spec()
    unstable.true_lag = [np.eye(4) * 1.1]
    with pytest.raises(ValueError, match="unstable"):
        unstable.validate()
    with pytest.raises(ValueError):
        AttackEpisode(3, 2, (0,))
    with pytest.raises(ValueError):
        AttackEpisode(0, 1, (0,), "teleport")


def test_spectral_radius_of_scalar_ar():
    assert spectral_radius(np.zeros((1, 1)), [np.array([[0.7]])]) == pytest.approx(0.7)
    # x1 = 0.5 x0 inside the window does not change the lag-1 roots here
    assert spectral_radius(np.array([[0, 0.5], [0, 0]]), [np.diag([0.6, 0.2])]) == pytest.approx(0.6)


def test_named_scenarios_validate():
    for name, factory in SCENARIOS.items():
        spec, n, k = factory(3)
        spec.validate(n)
    assert len(default_scenario(0).attack_episodes) == 3
    assert [e.start for e in forgetting_scenario().attack_episodes] == [5, 15]
    assert hub_scenario().attack_episodes[0].kind == "mean_shift"


def test_generation_is_seeded():
    a = generate(chain_spec(seed=3), 3, 40).values
    b = generate(chain_spec(seed=3), 3, 40).values
    c = generate(chain_spec(seed=4), 3, 40).values
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_csv_and_truth_files(tmp_path):
    sc = generate(chain_spec([AttackEpisode(1, 1, (0,), "mean_shift", 5.0)]), 3, 10)
    sc.save(tmp_path / "d.csv", tmp_path / "t.json")
    raw = load_csv(tmp_path / "d.csv")
    np.testing.assert_array_equal(raw.values, sc.values)
    assert raw.labels.tolist() == sc.row_labels.tolist()
    truth = json.loads((tmp_path / "t.json").read_text())
    assert truth["window_labels"] == [0, 1, 0]
    assert truth["prior"]["attack_nodes"] == ["x0"]


def test_fitted_structure_improves_with_samples():
    # median over 10 seeds of the distance to the true graph, at growing sample counts
    medians = []
    for n in (150, 600, 2000):
        d = []
        for seed in range(10):
            spec = structure_scenario(seed)
            sc = generate(spec, 1, n)
            fitted = discover(sc.values, spec.lag_order)
            d.append(structural_hamming(fitted, sc.true_graphs[0]))
        medians.append(float(np.median(d)))
    assert medians[0] >= medians[1] >= medians[2]
