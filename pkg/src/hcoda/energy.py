"""Clique indicators and the conditional energies minimised by ICM.

These are the reference (pure Python) scoring functions; :mod:`hcoda.icm`
has a compiled sweep that must agree with them.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np

from .graph import Hmrf
from .likelihood import CommunityModel, log_lik
from .params import Hyperparams


class Observations(NamedTuple):
    """Per-vertex data: node rows, edge rows (None when edges are ignored)."""

    nodes: np.ndarray
    edges: Optional[np.ndarray] = None
    node_kind: str = "continuous"
    edge_kind: str = "continuous"


def delta(x: int) -> int:
    return 1 if x == 0 else 0


def psi(zi: int, zj: int, zij: int, mode: str = "at_least_two") -> int:
    """Triangle indicator.

    ``at_least_two`` fires when some pair of the three labels agrees.
    ``literal`` fires when at most one pair agrees.
    """
    s = delta(zi - zj) + delta(zi - zij) + delta(zj - zij)
    if mode == "literal":
        return 1 if s <= 1 else 0
    return 1 if s >= 1 else 0


def node_energy(h: Hmrf, data: Observations, model: CommunityModel, hp: Hyperparams,
                z, i: int, k: int) -> float:
    """U_i(k) for node-vertex ``i`` given the labels of all other vertices."""
    u = -log_lik(model.node, data.nodes[i], k)
    ends, w_nn, w_ie, w_je, w_tri, ptr, inc = h.lists
    edge_vertices = h.with_edge_vertices
    for e in inc[ptr[i]:ptr[i + 1]]:
        a, b = ends[e]
        j = b if a == i else a
        zj = z[j]
        if zj != 0 and w_nn[e] > 0:
            u -= hp.lambda1 * w_nn[e] * delta(k - zj)
        if not edge_vertices:
            continue
        ze = z[h.n_nodes + e]
        w_ne = w_ie[e] if a == i else w_je[e]
        if ze != 0 and w_ne > 0:
            u -= hp.lambda2 * w_ne * delta(k - ze)
        if zj != 0 and ze != 0 and w_tri[e] > 0:
            u -= hp.lambda3 * w_tri[e] * psi(k, zj, ze, hp.psi_mode)
    return float(u)


def edge_energy(h: Hmrf, data: Observations, model: CommunityModel, hp: Hyperparams,
                z, ev: int, k: int) -> float:
    """U_ij(k) for edge-vertex ``ev`` (an HMRF vertex id, not an edge index)."""
    e = ev - h.n_nodes
    ends, _, w_ie, w_je, w_tri, _, _ = h.lists
    i, j = ends[e]
    u = -log_lik(model.edge, data.edges[e], k)
    if z[i] != 0:
        u -= hp.lambda2 * w_ie[e] * delta(z[i] - k)
    if z[j] != 0:
        u -= hp.lambda2 * w_je[e] * delta(z[j] - k)
    if z[i] != 0 and z[j] != 0:
        u -= hp.lambda3 * w_tri[e] * psi(z[i], z[j], k, hp.psi_mode)
    return float(u)


def vertex_energy(h, data, model, hp, z, b: int, k: int) -> float:
    if h.is_edge_vertex(b):
        return edge_energy(h, data, model, hp, z, b, k)
    return node_energy(h, data, model, hp, z, b, k)


def outlier_energy(hp: Hyperparams) -> float:
    """U_b(0): the configured threshold ``a0``, identical for every vertex."""
    if hp.threshold is None:
        raise ValueError("outlier energy is only defined in threshold mode")
    return float(hp.threshold)


def total_potential(h: Hmrf, hp: Hyperparams, z) -> float:
    """Prior energy U(Z) summed over every clique (diagnostic only)."""
    u = 0.0
    for e, (i, j) in enumerate(h.endpoints):
        zi, zj = z[i], z[j]
        if zi != 0 and zj != 0 and h.w_node_node[e] > 0:
            u -= hp.lambda1 * h.w_node_node[e] * delta(zi - zj)
        if not h.with_edge_vertices:
            continue
        ze = z[h.edge_vertex(e)]
        if ze == 0:
            continue
        if zi != 0:
            u -= hp.lambda2 * h.w_i_edge[e] * delta(zi - ze)
        if zj != 0:
            u -= hp.lambda2 * h.w_j_edge[e] * delta(zj - ze)
        if zi != 0 and zj != 0 and h.w_triangle[e] > 0:
            u -= hp.lambda3 * h.w_triangle[e] * psi(zi, zj, ze, hp.psi_mode)
    return float(u)
