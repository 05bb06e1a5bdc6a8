import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causaldetect.graph import CausalGraph
from causaldetect.trigger import (
    TriggerState,
    check_trigger,
    edge_weight_histogram,
    histogram_from_values,
    js_divergence,
    similarity,
)


def graph(weights, m=6):
    """Graph whose intra weights are placed on distinct upper-triangular slots."""
    a = np.zeros((m, m))
    slots = list(zip(*np.triu_indices(m, 1)))
    for w, (i, j) in zip(weights, slots):
        a[i, j] = w
    return CausalGraph([f"x{i}" for i in range(m)], a)


def test_single_edge_two_bins():
    h = edge_weight_histogram(graph([1.0]), bins=2, value_range=(0.0, 2.0))
    np.testing.assert_allclose(h.probabilities, [1 / 3, 2 / 3])
    h = edge_weight_histogram(graph([-1.0]), bins=2)
    np.testing.assert_allclose(h.probabilities, [1 / 3, 2 / 3])


def test_empty_graph_uniform_and_flagged():
    h = edge_weight_histogram(graph([]), bins=5)
    np.testing.assert_allclose(h.probabilities, 0.2)
    assert h.empty


@pytest.mark.parametrize("n", [1, 3, 7])
def test_all_in_first_bin(n):
    h = edge_weight_histogram(graph([0.1] * n), bins=4, value_range=(0.0, 2.0))
    np.testing.assert_allclose(h.probabilities, np.array([n + 1, 1, 1, 1]) / (n + 4))


def test_out_of_range_clamps_and_lag_edges_count():
    g = CausalGraph(["a", "b"], np.array([[0.0, 5.0], [0.0, 0.0]]), [np.array([[-3.0, 0.0], [0.0, 0.0]])])
    h = edge_weight_histogram(g, bins=4)
    assert h.counts.tolist() == [0, 0, 0, 2]
    h = histogram_from_values([-1.0], bins=4)
    assert h.counts.tolist() == [1, 0, 0, 0]


def test_histogram_argument_checks():
    with pytest.raises(ValueError):
        histogram_from_values([0.5], bins=1)
    with pytest.raises(ValueError):
        histogram_from_values([0.5], value_range=(1.0, 1.0))


def test_js_examples():
    assert js_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert js_divergence([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)
    # direct evaluation with M = [0.75, 0.25]
    kl_p = 0.5 * np.log2(0.5 / 0.75) + 0.5 * np.log2(0.5 / 0.25)
    kl_q = np.log2(1.0 / 0.75)
    expect = 0.5 * kl_p + 0.5 * kl_q
    assert js_divergence([0.5, 0.5], [1.0, 0.0]) == pytest.approx(expect, abs=1e-12)
    assert js_divergence([0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.3113, abs=1e-4)


def test_js_rejects_mismatched_bins():
    a = histogram_from_values([0.5], bins=4)
    b = histogram_from_values([0.5], bins=5)
    with pytest.raises(ValueError):
        js_divergence(a, b)
    c = histogram_from_values([0.5], bins=4, value_range=(0.0, 3.0))
    with pytest.raises(ValueError):
        js_divergence(a, c)


def test_similarity_examples():
    g = graph([0.2, 0.5, 1.3])
    assert similarity(g, g) == 1.0
    # without smoothing, disjoint bins give zero similarity
    assert similarity(graph([0.1]), graph([1.9]), bins=2, pseudo_count=0.0) == pytest.approx(0.0)
    assert 1 - js_divergence([0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.6887, abs=1e-4)


dist = st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=2, max_size=12)


def _norm(v):
    v = np.asarray(v) + 1e-3
    return v / v.sum()


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_js_properties(data):
    p = data.draw(dist)
    q = data.draw(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=len(p), max_size=len(p)))
    P, Q = _norm(p), _norm(q)
    d = js_divergence(P, Q)
    assert d == js_divergence(Q, P)
    assert 0.0 <= d <= 1.0
    assert js_divergence(P, P) == 0.0


def test_js_properties_1000_pairs():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        b = int(rng.integers(2, 30))
        P = histogram_from_values(rng.uniform(0, 2, size=rng.integers(0, 40)), b)
        Q = histogram_from_values(rng.exponential(0.5, size=rng.integers(0, 40)), b)
        d = js_divergence(P, Q)
        assert d == js_divergence(Q, P)
        assert 0.0 <= d <= 1.0
        assert js_divergence(P, P) == 0.0


def test_mixing_toward_p_never_increases_js():
    rng = np.random.default_rng(8)
    for _ in range(200):
        b = int(rng.integers(2, 10))
        P, Q = rng.dirichlet(np.ones(b)), rng.dirichlet(np.ones(b))
        vals = [js_divergence(P, a * P + (1 - a) * Q) for a in np.linspace(0, 1, 11)]
        assert all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))


def test_trigger_sequence():
    state = TriggerState(threshold=0.9)
    g = graph([0.5, 0.6, 0.7])
    assert check_trigger(state, g, 0) is None  # first window only records
    assert check_trigger(state, g.copy(), 1) is None  # similarity 1
    far = graph([1.9] * 15)
    ev = check_trigger(state, far, 2)
    assert ev is not None and ev.window == 2 and state.fired_at == 2
    assert ev.similarity < 0.9
    rec = json.loads(ev.to_json())
    assert rec == {"event": "trigger", "window": 2, "similarity": ev.similarity, "threshold": 0.9}
    # the reference is not replaced by the divergent graph
    assert state.last_graph.same_state(g)


def test_trigger_threshold_semantics():
    # a similarity of 0.5 against 0.9 fires, 1.0 does not
    state = TriggerState(0.9, bins=2, pseudo_count=0.0)
    check_trigger(state, graph([0.1, 0.2]), 0)
    ev = check_trigger(state, graph([0.1, 1.5]), 1)
    assert ev is not None and ev.similarity == pytest.approx(1 - js_divergence([1.0, 0.0], [0.5, 0.5]))


def test_trigger_deterministic_and_validated():
    g1, g2 = graph([0.3, 0.4]), graph([1.5, 1.8, 1.9])
    out = []
    for _ in range(2):
        s = TriggerState()
        check_trigger(s, g1, 0)
        ev = check_trigger(s, g2, 1)
        out.append((ev, s.last_similarity))
    assert out[0] == out[1]
    with pytest.raises(ValueError):
        TriggerState(threshold=1.0)
