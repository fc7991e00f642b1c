"""Planted-partition edge-attributed graphs with injected outliers."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import AttributedGraph
from .params import ConfigError

logger = logging.getLogger(__name__)

INJECTION_METHODS = ("uniform", "swap")


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings.

    Community ``k`` (1-based) has mean ``k * spacing`` in every coordinate
    for both node and edge data.  ``outlier_fraction`` is only used by
    :func:`make_dataset`; :func:`generate` never injects.
    """

    n_nodes: int = 1000
    n_communities: int = 5
    node_dim: int = 2
    edge_dim: int = 2
    spacing: float = 5.0
    sigma: float = 1.0
    p_in: float = 0.01
    p_out: float = 0.001
    outlier_fraction: float = 0.0
    inject_edges: bool = False
    injection: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if self.n_communities < 1:
            raise ConfigError("n_communities must be >= 1")
        if self.n_nodes < self.n_communities:
            raise ConfigError("need at least one node per community")
        if not 0 <= self.p_out <= self.p_in <= 1:
            raise ConfigError("need 0 <= p_out <= p_in <= 1")
        if not 0 <= self.outlier_fraction < 1:
            raise ConfigError("outlier_fraction must lie in [0, 1)")
        if self.injection not in INJECTION_METHODS:
            raise ConfigError(f"injection must be one of {INJECTION_METHODS}")
        if self.node_dim < 1 or self.edge_dim < 1:
            raise ConfigError("attribute dimensions must be >= 1")

    def replace(self, **changes) -> "SynthConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]


def preset(name: str, **overrides) -> SynthConfig:
    """Named sizes with expected degree held fixed (about 2 intra, 0.8 cross)."""
    sizes = {"graphA": 1000, "graphB": 10_000, "graphC": 100_000}
    if name not in sizes:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(sizes)}")
    n = sizes[name]
    cfg = SynthConfig(n_nodes=n, p_in=10.0 / n, p_out=1.0 / n)
    return cfg.replace(**overrides) if overrides else cfg


@dataclass
class SynthDataset:
    """Generated graph plus ground truth; outliers carry true label 0."""

    graph: AttributedGraph
    true_node_labels: np.ndarray
    true_edge_labels: np.ndarray
    outlier_nodes: np.ndarray
    outlier_edges: np.ndarray


def _triangle_pairs(idx: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Decode row-major indices of the strict upper triangle of an s x s matrix."""
    idx = np.asarray(idx, dtype=np.int64)

    def row_start(a):
        return a * (2 * s - a - 1) // 2

    a = np.floor(((2 * s - 1) - np.sqrt((2.0 * s - 1) ** 2 - 8.0 * idx)) / 2.0).astype(np.int64)
    a = np.clip(a, 0, max(s - 2, 0))
    # the square root can be off by one either way
    a = np.where(row_start(a) > idx, a - 1, a)
    a = np.where(row_start(a + 1) <= idx, a + 1, a)
    b = idx - row_start(a) + a + 1
    return a, b


def _sample_pairs(rng: np.random.Generator, n_pairs: int, prob: float) -> np.ndarray:
    if n_pairs == 0 or prob <= 0:
        return np.zeros(0, dtype=np.int64)
    count = rng.binomial(n_pairs, prob)
    return np.sort(rng.choice(n_pairs, size=count, replace=False))


def generate(cfg: SynthConfig, seed: Optional[int] = None) -> SynthDataset:
    """Planted-partition graph with Gaussian node and edge data, no outliers."""
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    n, K = cfg.n_nodes, cfg.n_communities
    sizes = np.full(K, n // K)
    sizes[: n % K] += 1
    starts = np.concatenate([[0], np.cumsum(sizes)])
    node_labels = np.repeat(np.arange(1, K + 1), sizes)

    means = np.arange(1, K + 1, dtype=float) * cfg.spacing
    node_data = means[node_labels - 1, None] + cfg.sigma * rng.standard_normal((n, cfg.node_dim))

    src, dst = [], []
    for c in range(K):
        s = int(sizes[c])
        a, b = _triangle_pairs(_sample_pairs(rng, s * (s - 1) // 2, cfg.p_in), s)
        src.append(a + starts[c])
        dst.append(b + starts[c])
        for d in range(c + 1, K):
            t = int(sizes[d])
            idx = _sample_pairs(rng, s * t, cfg.p_out)
            src.append(idx // t + starts[c])
            dst.append(idx % t + starts[d])
    src = np.concatenate(src).astype(np.int64)
    dst = np.concatenate(dst).astype(np.int64)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    m = len(src)

    li, lj = node_labels[src], node_labels[dst]
    pick = rng.integers(0, 2, size=m)
    edge_labels = np.where(li == lj, li, np.where(pick == 0, li, lj))
    edge_data = means[edge_labels - 1, None] + cfg.sigma * rng.standard_normal((m, cfg.edge_dim))

    isolated = n - np.count_nonzero(np.bincount(np.concatenate([src, dst]), minlength=n))
    if isolated:
        logger.info("generated graph has %d isolated nodes", isolated)

    graph = AttributedGraph(
        node_ids=list(range(n)),
        node_attrs=node_data,
        edges=list(zip(src.tolist(), dst.tolist())),
        strengths=np.ones(m),
        edge_attrs=edge_data,
    )
    return SynthDataset(graph, node_labels, edge_labels,
                        np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))


def _replacement_rows(rng, data, labels, count, cfg: SynthConfig, method: str):
    dim = data.shape[1]
    if method == "uniform":
        lo, hi = data.min(axis=0), data.max(axis=0)
        pad = 0.25 * (hi - lo)
        return rng.uniform(lo - pad, hi + pad, size=(count, dim))
    # swap: draw from a community at least two spacings away when one exists
    K = cfg.n_communities
    rows = np.empty((count, dim))
    for r, own in enumerate(labels):
        far = [c for c in range(1, K + 1) if abs(c - own) >= 2] or \
              [c for c in range(1, K + 1) if c != own] or [own]
        c = far[rng.integers(len(far))]
        rows[r] = c * cfg.spacing + cfg.sigma * rng.standard_normal(dim)
    return rows


def inject_outliers(ds: SynthDataset, f: float, seed: int, cfg: Optional[SynthConfig] = None,
                    inject_edges: bool = False, method: str = "uniform") -> SynthDataset:
    """Replace the data of round(f*n) random nodes and mark them label 0.

    ``uniform`` draws from the node-data bounding box widened by 50%;
    ``swap`` draws from a distant community's Gaussian.  Topology is never
    changed.  With ``inject_edges`` the same fraction of edges is treated
    likewise and recorded as edge outliers.
    """
    if not 0 < f < 1:
        raise ConfigError("outlier fraction must lie in (0, 1)")
    if method not in INJECTION_METHODS:
        raise ConfigError(f"injection must be one of {INJECTION_METHODS}")
    cfg = cfg or SynthConfig(n_nodes=max(ds.graph.n_nodes, 1))
    rng = np.random.default_rng(seed)
    g = ds.graph
    n = g.n_nodes
    count = int(round(f * n))
    if count >= n:
        raise ConfigError("outlier fraction leaves no normal nodes")

    node_data = np.array(g.node_data, copy=True)
    node_labels = ds.true_node_labels.copy()
    chosen = np.sort(rng.choice(n, size=count, replace=False))
    node_data[chosen] = _replacement_rows(rng, g.node_data, node_labels[chosen], count, cfg, method)
    node_labels[chosen] = 0
    g = g.with_node_attrs(node_data)

    edge_labels = ds.true_edge_labels.copy()
    edge_chosen = ds.outlier_edges
    if inject_edges and g.n_edges:
        m = g.n_edges
        ecount = int(round(f * m))
        edge_data = np.array(g.edge_data, copy=True)
        edge_chosen = np.sort(rng.choice(m, size=ecount, replace=False))
        edge_data[edge_chosen] = _replacement_rows(rng, ds.graph.edge_data, edge_labels[edge_chosen],
                                                   ecount, cfg, method)
        edge_labels[edge_chosen] = 0
        g = g.with_edge_attrs(edge_data)

    return SynthDataset(g, node_labels, edge_labels,
                        np.union1d(ds.outlier_nodes, chosen).astype(np.int64),
                        np.asarray(edge_chosen, dtype=np.int64))


def make_dataset(cfg: SynthConfig, seed: Optional[int] = None) -> SynthDataset:
    """Generate and, when ``cfg.outlier_fraction > 0``, inject outliers."""
    seed = cfg.seed if seed is None else seed
    ds = generate(cfg, seed)
    if cfg.outlier_fraction > 0:
        # offset keeps the injection stream independent of the generation stream
        ds = inject_outliers(ds, cfg.outlier_fraction, seed + 7919, cfg,
                             cfg.inject_edges, cfg.injection)
    return ds
