import logging

import numpy as np
import pytest

from hcoda import em
from hcoda.em import (
    coda_mode,
    detect,
    fit,
    fit_with_restarts,
    init_labels,
    kmeans,
    m_step,
    prepare,
)
from hcoda.energy import Observations
from hcoda.graph import AttributedGraph, GraphError
from hcoda.icm import icm_infer
from hcoda.metrics import ca_accuracy, od_accuracy
from hcoda.params import ConfigError, Hyperparams
from hcoda.synth import SynthConfig, generate, make_dataset


def test_kmeans_separated_1d():
    labels = kmeans(np.array([[0.0], [0.1], [10.0], [10.1]]), 2, np.random.default_rng(0))
    assert labels[0] == labels[1] != labels[2] == labels[3]


def test_init_single_cluster():
    data = Observations(np.random.default_rng(0).normal(size=(10, 2)))
    assert np.all(init_labels(data, 1, seed=0) == 1)


def test_init_identical_points_collapse():
    data = Observations(np.ones((6, 2)))
    assert np.all(init_labels(data, 2, seed=0) == 1)


def test_init_never_outlier_and_edges_aligned():
    ds = generate(SynthConfig(n_nodes=300, p_in=0.05, p_out=0.002), seed=1)
    g = ds.graph
    accs, agree = [], []
    for seed in range(10):
        z = init_labels(Observations(g.node_data, g.edge_data), 5, seed=seed, endpoints=g.endpoints)
        assert len(z) == g.n_nodes + g.n_edges and z.min() >= 1 and z.max() <= 5
        accs.append(ca_accuracy(z[:g.n_nodes], ds.true_node_labels))
        # after alignment edge ids agree with the node ids of the same community
        agree.append(np.mean(z[g.n_nodes:] == z[g.endpoints[:, 0]]))
    # an occasional seed settles in a merged local optimum
    assert np.mean(accs) > 0.95
    assert np.median(agree) > 0.9


def test_init_is_seeded():
    data = Observations(np.random.default_rng(0).normal(size=(50, 2)))
    assert np.array_equal(init_labels(data, 3, seed=4), init_labels(data, 3, seed=4))


def test_init_rejects_bad_k():
    with pytest.raises(ValueError):
        init_labels(Observations(np.zeros((3, 1))), 0, seed=0)


def planted(n=40, seed=0, outliers=0.0, spacing=20.0):
    cfg = SynthConfig(n_nodes=n, n_communities=2, spacing=spacing, p_in=0.3, p_out=0.02,
                      outlier_fraction=outliers)
    return make_dataset(cfg, seed=seed)


def test_planted_two_communities_recovered():
    ds = planted()
    hp = Hyperparams(K=2, rate=0.0, restarts=3)
    res = detect(ds.graph, hp)
    assert ca_accuracy(res.node_labels, ds.true_node_labels) == 1.0
    assert res.node_outliers.size == 0


def test_injected_outliers_rank_highest():
    ds = planted(n=400, seed=5, outliers=0.05)
    hp = Hyperparams(K=2, rate=0.05, restarts=3)
    res = detect(ds.graph, hp)
    assert od_accuracy(res.node_outliers, ds.outlier_nodes) >= 0.9


def test_fixed_point_one_iteration():
    ds = planted(seed=2)
    hp = Hyperparams(K=2, rate=0.0)
    h, data = prepare(ds.graph, hp)
    first = fit(h, data, hp, seed=0)
    again = fit(h, data, hp, z_init=first.labels)
    assert again.em_iterations == 1 and again.converged
    assert np.array_equal(again.labels, first.labels)


def test_rate_mode_output_is_icm_fixed_point():
    ds = planted(n=200, seed=3, outliers=0.05)
    hp = Hyperparams(K=2, rate=0.05)
    h, data = prepare(ds.graph, hp)
    res = fit(h, data, hp)
    again = icm_infer(h, data, res.model, hp, res.labels)
    assert np.array_equal(again.labels, res.labels)


def test_outlier_sets_match_zero_labels():
    ds = planted(n=200, seed=4, outliers=0.05)
    res = detect(ds.graph, Hyperparams(K=2, rate=0.05, restarts=2))
    assert np.array_equal(res.node_outliers, np.flatnonzero(res.node_labels == 0))
    assert np.array_equal(res.edge_outliers, np.flatnonzero(res.edge_labels == 0))
    assert res.node_outliers.size == 10


def test_m_step_equals_closed_form():
    rng = np.random.default_rng(0)
    nodes, edges = rng.normal(size=(30, 3)), rng.normal(size=(20, 2))
    z = np.concatenate([rng.integers(0, 4, size=30), rng.integers(0, 4, size=20)])
    hp = Hyperparams(K=3)
    model = m_step(z, Observations(nodes, edges), hp, 30, (1.0, 1.0))
    for X, labels, block in ((nodes, z[:30], model.node), (edges, z[30:], model.edge)):
        for k in range(1, 4):
            rows = X[labels == k]
            mu = rows.sum(axis=0) / len(rows)
            var = ((rows - mu) ** 2).sum(axis=0) / len(rows)
            assert np.allclose(block.means[k - 1], mu, atol=1e-9, rtol=0)
            assert np.allclose(block.variances[k - 1], var, atol=1e-9, rtol=0)


def test_reseed_policy_fills_empty_community():
    rng = np.random.default_rng(1)
    X = np.concatenate([rng.normal(0, 1, size=(20, 1)), [[40.0]]])
    z = np.ones(21, dtype=np.int64)
    hp = Hyperparams(K=2, empty_policy="reseed")
    with pytest.warns(UserWarning):
        model = m_step(z, Observations(X), hp, 21, (1.0, None))
    assert model.node.means[1, 0] == 40.0


def test_restart_returns_max_likelihood():
    ds = planted(n=200, seed=6, outliers=0.05)
    hp = Hyperparams(K=4, rate=0.05, restarts=4)
    h, data = prepare(ds.graph, hp)
    res = fit_with_restarts(h, data, hp, base_seed=10)
    assert [s.seed for s in res.restarts] == [10, 11, 12, 13]
    best = max(s.log_likelihood for s in res.restarts)
    assert res.log_likelihood == best
    assert res.seed == min(s.seed for s in res.restarts if s.log_likelihood == best)


def test_single_restart_equals_fit():
    ds = planted(seed=7)
    hp = Hyperparams(K=2, rate=0.05)
    h, data = prepare(ds.graph, hp)
    a = fit_with_restarts(h, data, hp, n=1, base_seed=3)
    b = fit(h, data, hp, seed=3)
    assert np.array_equal(a.labels, b.labels) and a.log_likelihood == b.log_likelihood


def test_restart_tie_keeps_lowest_seed(monkeypatch):
    real_fit = em.fit

    def flat_fit(h, data, hp, seed=None, z_init=None, debug=False):
        res = real_fit(h, data, hp, seed=seed)
        res.log_likelihood = -1.0
        return res

    monkeypatch.setattr(em, "fit", flat_fit)
    ds = planted(seed=8)
    hp = Hyperparams(K=2, rate=0.0)
    h, data = prepare(ds.graph, hp)
    assert fit_with_restarts(h, data, hp, n=3, base_seed=5).seed == 5


def test_restarts_must_be_positive():
    ds = planted()
    hp = Hyperparams(K=2)
    h, data = prepare(ds.graph, hp)
    with pytest.raises(ValueError):
        fit_with_restarts(h, data, hp, n=0)
    with pytest.raises(ConfigError):
        Hyperparams(restarts=0)


def test_em_converges_in_most_runs():
    converged = 0
    for seed in range(20):
        ds = make_dataset(SynthConfig(n_nodes=300, p_in=0.03, p_out=0.003, outlier_fraction=0.05), seed=seed)
        hp = Hyperparams(K=5, rate=0.05, seed=seed)
        h, data = prepare(ds.graph, hp)
        converged += fit(h, data, hp).converged
    assert converged >= 18


def test_iteration_cap_flags_nonconvergence(caplog):
    ds = make_dataset(SynthConfig(n_nodes=300, p_in=0.03, p_out=0.003, outlier_fraction=0.05), seed=0)
    hp = Hyperparams(K=5, rate=0.05, max_em_iter=1)
    h, data = prepare(ds.graph, hp)
    with caplog.at_level(logging.WARNING):
        res = fit(h, data, hp)
    assert res.em_iterations == 1
    if not res.converged:
        assert "cap" in caplog.text


def test_coda_mode_settings():
    hp = coda_mode(Hyperparams(lambda2=3.0, lambda3=2.0))
    assert hp.lambda2 == 0.0 and hp.lambda3 == 0.0 and hp.coda


class CountingRows:
    """Sequence of attribute rows that counts every access."""

    def __init__(self, rows):
        self.rows = [np.asarray(r) for r in rows]
        self.reads = 0

    def __len__(self):
        self.reads += 1
        return len(self.rows)

    def __getitem__(self, i):
        self.reads += 1
        return self.rows[i]

    def __iter__(self):
        self.reads += 1
        return iter(self.rows)

    def __array__(self, dtype=None, copy=None):
        self.reads += 1
        return np.asarray(self.rows, dtype=dtype)


def test_coda_reads_no_edge_attributes():
    ds = make_dataset(SynthConfig(n_nodes=200, p_in=0.05, p_out=0.005, outlier_fraction=0.05), seed=1)
    counter = CountingRows(ds.graph.edge_attrs)
    g = AttributedGraph(ds.graph.node_ids, ds.graph.node_attrs, ds.graph.edges,
                        ds.graph.strengths, counter)
    detect(g, coda_mode(Hyperparams(K=5, rate=0.05, restarts=2)))
    assert counter.reads == 0
    detect(g, Hyperparams(K=5, rate=0.05, restarts=1))
    assert counter.reads > 0


def test_hcoda_and_coda_can_disagree_when_edges_contradict_nodes():
    # node data looks normal everywhere, but every edge touching node 0
    # carries data far from both communities
    rng = np.random.default_rng(0)
    n = 40
    truth = np.repeat([1, 2], n // 2)
    nodes = [(i, [truth[i] * 10.0 + rng.normal()]) for i in range(n)]
    edges = []
    for a in range(n):
        for b in range(a + 1, n):
            if truth[a] == truth[b] and rng.random() < 0.4:
                edges.append((a, b, 1.0, [truth[a] * 10.0 + rng.normal()]))
    edges += [(0, b, 1.0, [0.0]) for b in range(1, 6) if not any(e[:2] == (0, b) for e in edges)]
    edges = [(a, b, w, [-60.0 + rng.normal()] if 0 in (a, b) else x) for a, b, w, x in edges]
    g = AttributedGraph.from_records(nodes, edges)
    hp = Hyperparams(K=2, rate=0.05, lambda2=3.0, lambda3=3.0, restarts=2)
    full = detect(g, hp)
    base = detect(g, coda_mode(hp))
    assert set(full.node_outliers.tolist()) != set(base.node_outliers.tolist())


def test_detect_rejects_invalid_graph():
    g = AttributedGraph.from_records([(0, [1.0]), (1, [2.0])], [(0, 0, 1.0, [1.0])])
    with pytest.raises(GraphError):
        detect(g, Hyperparams(K=1))


def test_debug_fit_matches_fast_fit():
    ds = make_dataset(SynthConfig(n_nodes=120, p_in=0.06, p_out=0.006, outlier_fraction=0.05), seed=3)
    hp = Hyperparams(K=5, rate=0.05, restarts=1)
    fast = detect(ds.graph, hp)
    slow = detect(ds.graph, hp, debug=True)
    assert np.array_equal(fast.labels, slow.labels)
    assert slow.violations == 0
