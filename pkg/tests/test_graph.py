import json

import numpy as np
import pytest

from causaldetect.graph import CausalGraph, edge_set, is_acyclic, topological_order


def sample_graph():
    intra = np.array([[0.0, 0.7, 0.0], [0.0, 0.0, -0.3], [0.0, 0.0, 0.0]])
    lag1 = np.array([[0.4, 0.0, 0.0], [0.0, 0.0, 0.0], [0.1234567890123, 0.0, 0.0]])
    return CausalGraph(["a", "b", "c"], intra, [lag1, np.zeros((3, 3))], 0.1, {"h": np.float64(1e-9), "iters": 3})


def test_edges_and_counts():
    g = sample_graph()
    assert g.edge_count() == 4
    assert ("a", "b", 0, 0.7) in g.edges()
    assert ("c", "a", 1, 0.1234567890123) in g.edges()
    assert edge_set(g) == {(0, 0, 1), (0, 1, 2), (1, 0, 0), (1, 2, 0)}
    assert edge_set(g, include_lags=False) == {(0, 0, 1), (0, 1, 2)}


def test_json_round_trip_is_exact():
    g = sample_graph()
    text = g.to_json()
    back = CausalGraph.from_json(text)
    assert back.same_state(g)
    assert back.node_ids == g.node_ids and back.max_lag == 2
    assert back.diagnostics["h"] == 1e-9
    d = json.loads(text)
    assert {e["type"] for e in d["edges"]} == {"intra", "lag-1"}


def test_json_round_trip_random_weights():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = int(rng.integers(1, 6))
        g = CausalGraph([f"n{i}" for i in range(m)], np.triu(rng.normal(size=(m, m)), 1),
                        [rng.normal(size=(m, m)) for _ in range(int(rng.integers(0, 3)))])
        back = CausalGraph.from_json(g.to_json())
        assert back.same_state(g)
        assert all(np.array_equal(a, b) for a, b in zip([back.intra] + back.lags, [g.intra] + g.lags))


def test_validation():
    with pytest.raises(ValueError):
        CausalGraph(["a", "a"], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        CausalGraph(["a", "b"], np.zeros((3, 3)))
    with pytest.raises(ValueError):
        CausalGraph(["a"], np.array([[np.inf]]))
    with pytest.raises(ValueError):
        CausalGraph.from_dict({"node_ids": ["a"], "edges": [{"source": "a", "target": "a", "type": "x", "weight": 1}]})


def test_acyclicity_helpers():
    dag = np.array([[0, 1, 1], [0, 0, 1], [0, 0, 0]])
    assert is_acyclic(dag)
    assert topological_order(dag) == [0, 1, 2]
    cyc = dag.copy()
    cyc[2, 0] = 1
    assert not is_acyclic(cyc)
    assert topological_order(cyc) is None


def test_copy_is_independent():
    g = sample_graph()
    c = g.copy()
    c.intra[0, 1] = 5.0
    c.lags[0][0, 0] = 5.0
    assert g.intra[0, 1] == 0.7 and g.lags[0][0, 0] == 0.4
    assert np.all(g.abs().intra >= 0)
