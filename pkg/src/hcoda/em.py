"""Hard EM around ICM: initialisation, the fit loop, restarts and CODA mode."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .energy import Observations
from .graph import AttributedGraph, Hmrf, build_hmrf, validate_graph, GraphError
from .icm import icm_infer
from .likelihood import (
    CommunityModel,
    EmptyCommunityWarning,
    GaussianBlock,
    bounding_box_density,
    total_data_log_likelihood,
    update_block,
)
from .params import Hyperparams

logger = logging.getLogger(__name__)


@dataclass
class RestartSummary:
    seed: int
    log_likelihood: float
    em_iterations: int
    converged: bool


@dataclass
class FitResult:
    """Outcome of one EM run (or the winning run among restarts).

    ``node_outliers`` are node positions, ``edge_outliers`` edge positions.
    """

    labels: np.ndarray
    model: CommunityModel
    node_outliers: np.ndarray
    edge_outliers: np.ndarray
    log_likelihood: float
    em_iterations: int
    converged: bool
    seed: int
    n_nodes: int
    best_energy: Optional[np.ndarray] = None
    violations: int = 0
    restarts: list[RestartSummary] = field(default_factory=list)

    @property
    def node_labels(self) -> np.ndarray:
        return self.labels[:self.n_nodes]

    @property
    def edge_labels(self) -> np.ndarray:
        return self.labels[self.n_nodes:]


def _lloyd(X, distinct, K, rng, iters, keep_n):
    centers = distinct[rng.choice(len(distinct), size=K, replace=False)].copy()
    for _ in range(iters):
        d2 = np.sum((X[:, None, :] - centers[None]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1)
        kept = np.ones(len(X), dtype=bool)
        if keep_n < len(X):
            nearest = d2[np.arange(len(X)), labels]
            kept[np.argsort(nearest, kind="stable")[keep_n:]] = False
        for k in range(K):
            members = X[(labels == k) & kept]
            if len(members):
                centers[k] = members.mean(axis=0)
    return centers


def kmeans(X, K: int, rng: np.random.Generator, iters: int = 10, trim: float = 0.0,
           n_init: int = 1) -> np.ndarray:
    """Trimmed Lloyd's k-means; returns labels 0..K-1 for every row.

    Each of ``n_init`` attempts starts from K distinct data points sampled
    uniformly.  Center updates leave out the ``trim`` fraction of rows
    farthest from their nearest center, so gross outliers cannot capture a
    center.  The attempt with the smallest trimmed inertia wins.  With fewer
    distinct points than K the surplus centers duplicate existing ones and
    stay empty.
    """
    X = np.asarray(X, dtype=float)
    X = X.reshape(len(X), -1)
    distinct = np.unique(X, axis=0)
    keep_n = len(X) - int(np.floor(trim * len(X)))
    if len(distinct) < K:
        candidates = [distinct[np.arange(K) % len(distinct)]]
    else:
        candidates = [_lloyd(X, distinct, K, rng, iters, keep_n) for _ in range(n_init)]
    best, best_cost = None, np.inf
    for centers in candidates:
        d2 = np.sum((X[:, None, :] - centers[None]) ** 2, axis=2)
        cost = np.sort(d2.min(axis=1))[:keep_n].sum()
        if cost < best_cost:
            best, best_cost = np.argmin(d2, axis=1), cost
    return best


def _compress(labels: np.ndarray) -> np.ndarray:
    """Renumber the populated clusters 1..u, keeping their relative order."""
    used = np.unique(labels)
    remap = np.zeros(labels.max(initial=0) + 1, dtype=np.int64)
    remap[used] = np.arange(1, len(used) + 1)
    return remap[labels]


def _features(X, kind: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    X = X.reshape(len(X), -1)
    if kind == "counts":
        totals = X.sum(axis=1, keepdims=True)
        return np.divide(X, totals, out=np.zeros_like(X), where=totals > 0)
    return X


def _align_edge_labels(edge_labels, node_labels, endpoints, K: int) -> np.ndarray:
    """Permute edge cluster ids to agree most with their endpoint node labels."""
    agree = np.zeros((K + 1, K + 1))
    for side in (0, 1):
        np.add.at(agree, (edge_labels, node_labels[endpoints[:, side]]), 1.0)
    rows, cols = linear_sum_assignment(-agree[1:, 1:])
    perm = np.arange(K + 1)
    perm[rows + 1] = cols + 1
    return perm[edge_labels]


def init_labels(data: Observations, K: int, seed: int, endpoints=None, iters: int = 10,
                trim: float = 0.05, n_init: int = 10) -> np.ndarray:
    """Initial labels from k-means, with no vertex starting as an outlier.

    Node-vertices cluster on node data.  When ``data.edges`` is given the
    edge-vertices cluster separately on edge data and their cluster ids are
    matched to node clusters by how often edges share a label with their
    endpoints.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng(seed)
    node_z = _compress(kmeans(_features(data.nodes, data.node_kind), K, rng, iters, trim, n_init))
    if data.edges is None:
        return node_z
    edges = np.asarray(data.edges)
    if len(edges) == 0:
        return node_z
    edge_z = _compress(kmeans(_features(edges, data.edge_kind), K, rng, iters, trim, n_init))
    if endpoints is not None and len(endpoints):
        edge_z = _align_edge_labels(edge_z, node_z, np.asarray(endpoints), K)
    return np.concatenate([node_z, edge_z])


def _reseed_empty(block, X, labels, K):
    """Move each empty community onto the worst-fitting non-outlier point."""
    counts = np.bincount(labels, minlength=K + 1)[1:]
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0 or len(X) == 0:
        return block
    fit = block.log_lik_matrix(X).max(axis=1)
    fit = np.where(labels > 0, fit, np.inf)
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    for k, row in zip(empty, np.argsort(fit, kind="stable")):
        if isinstance(block, GaussianBlock):
            block.means[k] = X[row]
            block.variances[k] = np.maximum(X.var(axis=0), block.variances[k])
        else:
            num = X[row] + 1e-3
            block.beta[k] = num / num.sum()
    return block


def m_step(z, data: Observations, hp: Hyperparams, n_nodes: int, rho: tuple,
           previous: Optional[CommunityModel] = None) -> CommunityModel:
    z = np.asarray(z)
    node_z = z[:n_nodes]
    prev_node = previous.node if previous is not None else None
    node = update_block(data.node_kind, node_z, data.nodes, hp.K, prev_node,
                        hp.sigma_floor, hp.smoothing)
    if hp.empty_policy == "reseed":
        node = _reseed_empty(node, data.nodes, node_z, hp.K)
    edge = None
    if len(z) > n_nodes:
        edge_z = z[n_nodes:]
        prev_edge = previous.edge if previous is not None else None
        edge = update_block(data.edge_kind, edge_z, data.edges, hp.K, prev_edge,
                            hp.sigma_floor, hp.smoothing)
        if hp.empty_policy == "reseed":
            edge = _reseed_empty(edge, data.edges, edge_z, hp.K)
    return CommunityModel(node=node, rho_node=rho[0], edge=edge, rho_edge=rho[1])


def default_rho(data: Observations, hp: Hyperparams) -> tuple:
    rho_node = hp.rho_node if hp.rho_node is not None else bounding_box_density(data.nodes)
    rho_edge = None
    if data.edges is not None:
        rho_edge = hp.rho_edge if hp.rho_edge is not None else bounding_box_density(data.edges)
    return rho_node, rho_edge


def fit(h: Hmrf, data: Observations, hp: Hyperparams, seed: Optional[int] = None,
        z_init=None, debug: bool = False) -> FitResult:
    """One hard-EM run: M-step on current labels, then ICM, until labels repeat."""
    seed = hp.seed if seed is None else seed
    n = h.n_nodes
    if h.with_edge_vertices and h.n_edges and data.edges is None:
        raise ValueError("HMRF has edge-vertices but no edge data was given")
    if z_init is None:
        z = init_labels(data if h.with_edge_vertices else data._replace(edges=None),
                        hp.K, seed, h.endpoints, hp.kmeans_iter, hp.init_trim, hp.kmeans_init)
    else:
        z = np.array(z_init, dtype=np.int64, copy=True)
    rng = np.random.default_rng(seed) if hp.random_order else None
    rho = default_rho(data, hp)

    model = None
    converged = False
    violations = 0
    icm = None
    iterations = 0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EmptyCommunityWarning)
        while iterations < hp.max_em_iter:
            iterations += 1
            model = m_step(z, data, hp, n, rho, model)
            icm = icm_infer(h, data, model, hp, z, debug=debug, rng=rng)
            violations += icm.violations
            if np.array_equal(icm.labels, z):
                converged = True
                break
            z = icm.labels
    if caught:
        logger.warning("seed %d: %d M-steps met an empty community", seed, len(caught))
    if not converged:
        logger.warning("seed %d: EM stopped at the %d-iteration cap", seed, hp.max_em_iter)

    ll = total_data_log_likelihood(model, z, data.nodes, data.edges)
    return FitResult(
        labels=z,
        model=model,
        node_outliers=np.flatnonzero(z[:n] == 0),
        edge_outliers=np.flatnonzero(z[n:] == 0),
        log_likelihood=ll,
        em_iterations=iterations,
        converged=converged,
        seed=seed,
        n_nodes=n,
        best_energy=icm.best_energy if icm is not None else None,
        violations=violations,
    )


def fit_with_restarts(h: Hmrf, data: Observations, hp: Hyperparams, n: Optional[int] = None,
                      base_seed: Optional[int] = None, debug: bool = False) -> FitResult:
    """Run ``n`` seeded fits and keep the one with the largest data likelihood.

    Seeds are ``base_seed .. base_seed + n - 1``; ties keep the lowest seed.
    """
    n = hp.restarts if n is None else n
    base_seed = hp.seed if base_seed is None else base_seed
    if n < 1:
        raise ValueError("need at least one restart")
    best = None
    summaries = []
    for s in range(base_seed, base_seed + n):
        res = fit(h, data, hp, seed=s, debug=debug)
        summaries.append(RestartSummary(s, res.log_likelihood, res.em_iterations, res.converged))
        if best is None or res.log_likelihood > best.log_likelihood:
            best = res
    best.restarts = summaries
    return best


def coda_mode(hp: Hyperparams) -> Hyperparams:
    """Baseline settings: no edge cliques and no edge-vertices at all."""
    return hp.replace(lambda2=0.0, lambda3=0.0, coda=True)


def prepare(g: AttributedGraph, hp: Hyperparams, pair_stats=None) -> tuple[Hmrf, Observations]:
    """Build the HMRF and observation arrays for ``g``.

    In CODA mode the edge attribute rows are never touched.
    """
    h = build_hmrf(g, hp.weight_scheme, pair_stats=pair_stats, with_edge_vertices=not hp.coda,
                   triangle=hp.triangle_scheme)
    edges = None if hp.coda else g.edge_data
    data = Observations(g.node_data, edges, g.node_kind, g.edge_kind)
    return h, data


def detect(g: AttributedGraph, hp: Hyperparams, pair_stats=None, debug: bool = False) -> FitResult:
    """Validate ``g`` and run restarted HCODA (or CODA when ``hp.coda``)."""
    report = validate_graph(g, edge_attributes=not hp.coda)
    if not report.ok:
        raise GraphError("; ".join(report.violations))
    h, data = prepare(g, hp, pair_stats)
    return fit_with_restarts(h, data, hp, debug=debug)
