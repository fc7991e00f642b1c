"""Community data models, the uniform outlier density and hard M-step updates.

Community ``k`` in the public API is 1-based (label 0 is the outlier
community); parameter arrays are indexed ``k - 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

SIGMA_FLOOR = 1e-6
SMOOTHING = 1e-3
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class EmptyCommunityWarning(UserWarning):
    pass


@dataclass
class GaussianBlock:
    """Diagonal Gaussians, one row of ``means``/``variances`` per community."""

    means: np.ndarray
    variances: np.ndarray

    @property
    def n_communities(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def log_lik_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        quad = np.sum((X[:, None, :] - self.means[None]) ** 2 / self.variances[None], axis=2)
        norm = 0.5 * np.sum(np.log(self.variances), axis=1) + self.dim * LOG_SQRT_2PI
        return -0.5 * quad - norm


@dataclass
class MultinomialBlock:
    """Per-community word distributions ``beta`` of shape (K, T)."""

    beta: np.ndarray

    @property
    def n_communities(self) -> int:
        return self.beta.shape[0]

    @property
    def dim(self) -> int:
        return self.beta.shape[1]

    def log_lik_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        return X @ np.log(self.beta).T


Block = Union[GaussianBlock, MultinomialBlock]


@dataclass
class CommunityModel:
    """Community parameters for node data and (optionally) edge data.

    Node and edge blocks share the label space 1..K but are estimated
    separately, so node and edge attributes may differ in kind and
    dimension.  ``rho_node``/``rho_edge`` are the outlier densities.
    """

    node: Block
    rho_node: float
    edge: Optional[Block] = None
    rho_edge: Optional[float] = None

    @property
    def n_communities(self) -> int:
        return self.node.n_communities

    def block(self, edge: bool) -> Block:
        return self.edge if edge else self.node


def _check_dim(block: Block, x: np.ndarray) -> np.ndarray:
    x = np.ravel(np.asarray(x, dtype=float))
    if x.size != block.dim:
        raise ValueError(f"data vector has length {x.size}, model block expects {block.dim}")
    return x


def log_lik(block: Block, x, k: int) -> float:
    """ln P(x | community k) under ``block``, with ``k`` in 1..K."""
    if not 1 <= k <= block.n_communities:
        raise ValueError(f"community {k} outside 1..{block.n_communities}")
    x = _check_dim(block, x)
    # same arithmetic as the vectorised path so both agree to the last bit
    if isinstance(block, GaussianBlock):
        var = block.variances[k - 1]
        quad = np.sum((x - block.means[k - 1]) ** 2 / var)
        norm = 0.5 * np.sum(np.log(var)) + block.dim * LOG_SQRT_2PI
        return float(-0.5 * quad - norm)
    return float(block.log_lik_matrix(x[None, :])[0, k - 1])


def outlier_log_lik(model: CommunityModel, edge: bool = False) -> float:
    rho = model.rho_edge if edge else model.rho_node
    if rho is None or not rho > 0:
        raise ValueError("outlier density must be positive")
    return math.log(rho)


def bounding_box_density(X: np.ndarray) -> float:
    """1 / volume of the data bounding box; flat coordinates count as width 1."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return 1.0
    width = X.max(axis=0) - X.min(axis=0)
    width = np.where(width > 0, width, 1.0)
    return float(np.exp(-np.sum(np.log(width))))


def _members(labels: np.ndarray, K: int) -> list[np.ndarray]:
    labels = np.asarray(labels)
    return [np.flatnonzero(labels == k) for k in range(1, K + 1)]


def update_gaussian(labels, X, K: int, previous: Optional[GaussianBlock] = None,
                    sigma_floor: float = SIGMA_FLOOR) -> GaussianBlock:
    """Hard-assignment weighted MLE of diagonal Gaussians.

    Zero-labelled rows belong to no community.  A community with no members
    keeps its ``previous`` parameters (with an :class:`EmptyCommunityWarning`);
    without a previous block it falls back to the moments of all data.
    """
    X = np.asarray(X, dtype=float)
    X = X.reshape(len(X), -1)
    d = X.shape[1]
    means = np.empty((K, d))
    variances = np.empty((K, d))
    floor2 = sigma_floor ** 2
    for k, idx in enumerate(_members(labels, K)):
        if idx.size == 0:
            warnings.warn(f"community {k + 1} is empty; keeping previous parameters",
                          EmptyCommunityWarning, stacklevel=2)
            if previous is not None:
                means[k] = previous.means[k]
                variances[k] = previous.variances[k]
            else:
                means[k] = X.mean(axis=0) if len(X) else 0.0
                variances[k] = np.maximum(X.var(axis=0), floor2) if len(X) else 1.0
            continue
        rows = X[idx]
        mu = rows.mean(axis=0)
        means[k] = mu
        variances[k] = np.maximum(np.mean((rows - mu) ** 2, axis=0), floor2)
    return GaussianBlock(means, variances)


def update_multinomial(labels, counts, K: int, previous: Optional[MultinomialBlock] = None,
                       smoothing: float = SMOOTHING) -> MultinomialBlock:
    """Hard-assignment multinomial update with additive smoothing per cell."""
    counts = np.asarray(counts, dtype=float)
    counts = counts.reshape(len(counts), -1)
    T = counts.shape[1]
    beta = np.empty((K, T))
    for k, idx in enumerate(_members(labels, K)):
        if idx.size == 0:
            warnings.warn(f"community {k + 1} is empty; keeping previous parameters",
                          EmptyCommunityWarning, stacklevel=2)
            if previous is not None:
                beta[k] = previous.beta[k]
                continue
            num = counts.sum(axis=0) + smoothing
        else:
            num = counts[idx].sum(axis=0) + smoothing
        total = num.sum()
        beta[k] = num / total if total > 0 else np.full(T, 1.0 / T)
    return MultinomialBlock(beta)


def update_block(kind: str, labels, X, K: int, previous=None,
                 sigma_floor: float = SIGMA_FLOOR, smoothing: float = SMOOTHING) -> Block:
    if kind == "counts":
        return update_multinomial(labels, X, K, previous, smoothing)
    return update_gaussian(labels, X, K, previous, sigma_floor)


def total_data_log_likelihood(model: CommunityModel, z, node_data, edge_data=None) -> float:
    """Sum over HMRF vertices of ln rho (outliers) or ln P(S_b | z_b).

    Edge-vertices are included when ``z`` is longer than the node count and
    the model has an edge block.
    """
    z = np.asarray(z)
    node_data = np.asarray(node_data, dtype=float)
    n = len(node_data)
    total = _block_total(model.node, model.rho_node, z[:n], node_data)
    if len(z) > n and model.edge is not None:
        total += _block_total(model.edge, model.rho_edge, z[n:], np.asarray(edge_data, dtype=float))
    return total


def _block_total(block: Block, rho: float, z: np.ndarray, X: np.ndarray) -> float:
    if len(z) == 0:
        return 0.0
    out = z == 0
    total = float(np.count_nonzero(out)) * math.log(rho)
    normal = np.flatnonzero(~out)
    if normal.size:
        ll = block.log_lik_matrix(X[normal])
        total += float(ll[np.arange(normal.size), z[normal] - 1].sum())
    return total
