"""Iterated conditional modes over the HMRF, plus rate-based outlier selection.

Two sweep implementations exist.  The default is a compiled kernel working
on precomputed data energies; ``debug=True`` runs a pure Python sweep built
on :mod:`hcoda.energy` and checks that no update raises a vertex's
conditional energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .energy import Observations, outlier_energy, vertex_energy
from .graph import Hmrf
from .likelihood import CommunityModel
from .params import ConfigError, Hyperparams


@dataclass
class IcmResult:
    labels: np.ndarray
    sweeps: int
    converged: bool
    best_energy: np.ndarray
    violations: int = 0


def best_normal_label(h: Hmrf, data: Observations, model: CommunityModel, hp: Hyperparams,
                      z, b: int) -> tuple[int, float]:
    """argmin over k in 1..K of U_b(k); ties go to the smallest k."""
    best_k, best_u = 1, math.inf
    for k in range(1, hp.K + 1):
        u = vertex_energy(h, data, model, hp, z, b, k)
        if u < best_u:
            best_k, best_u = k, u
    return best_k, best_u


def select_outliers_by_rate(node_energies, edge_energies, r: float):
    """Mark the ceil(r*n) highest-energy vertices of each kind as outliers.

    Node-vertices and edge-vertices are ranked separately.  Ties at the
    cutoff go to the lower index.  Returns two sorted index arrays.
    """
    if not 0 <= r < 1:
        raise ConfigError(f"outlier rate {r} must lie in [0, 1)")

    def top(energies):
        energies = np.asarray(energies, dtype=float)
        n = energies.size
        count = math.ceil(r * n - 1e-9)
        if count <= 0:
            return np.zeros(0, dtype=np.int64)
        order = np.lexsort((np.arange(n), -energies))
        return np.sort(order[:count])

    edge_energies = np.zeros(0) if edge_energies is None else edge_energies
    return top(node_energies), top(edge_energies)


def data_energies(h: Hmrf, data: Observations, model: CommunityModel):
    """Negative log-likelihood matrices (n, K) for node- and edge-vertices."""
    neg_node = -model.node.log_lik_matrix(data.nodes)
    if h.with_edge_vertices and h.n_edges:
        neg_edge = -model.edge.log_lik_matrix(data.edges)
    else:
        neg_edge = np.zeros((0, neg_node.shape[1]))
    return np.ascontiguousarray(neg_node), np.ascontiguousarray(neg_edge)


@njit(cache=True)
def _psi(a, b, c, literal):
    s = (a == b) + (a == c) + (b == c)
    if literal:
        return s <= 1
    return s >= 1


@njit(cache=True)
def _sweep(z, order, n_nodes, neg_node, neg_edge, ptr, inc, ends, w_nn, w_ie, w_je, w_tri,
           lam1, lam2, lam3, literal, with_edges, threshold_mode, a0, best_u):
    K = neg_node.shape[1]
    u = np.empty(K)
    changed = 0
    for b in order:
        if b < n_nodes:
            for k in range(K):
                u[k] = neg_node[b, k]
            for p in range(ptr[b], ptr[b + 1]):
                e = inc[p]
                if ends[e, 0] == b:
                    j = ends[e, 1]
                    wie = w_ie[e]
                else:
                    j = ends[e, 0]
                    wie = w_je[e]
                zj = z[j]
                if zj != 0 and w_nn[e] > 0:
                    u[zj - 1] -= lam1 * w_nn[e]
                if with_edges:
                    ze = z[n_nodes + e]
                    if ze != 0 and wie > 0:
                        u[ze - 1] -= lam2 * wie
                    if zj != 0 and ze != 0 and w_tri[e] > 0:
                        for k in range(K):
                            if _psi(k + 1, zj, ze, literal):
                                u[k] -= lam3 * w_tri[e]
        else:
            e = b - n_nodes
            zi = z[ends[e, 0]]
            zj = z[ends[e, 1]]
            for k in range(K):
                u[k] = neg_edge[e, k]
            if zi != 0:
                u[zi - 1] -= lam2 * w_ie[e]
            if zj != 0:
                u[zj - 1] -= lam2 * w_je[e]
            if zi != 0 and zj != 0:
                for k in range(K):
                    if _psi(zi, zj, k + 1, literal):
                        u[k] -= lam3 * w_tri[e]
        kbest = 0
        for k in range(1, K):
            if u[k] < u[kbest]:
                kbest = k
        best_u[b] = u[kbest]
        new = kbest + 1
        if threshold_mode and a0 < u[kbest]:
            new = 0
        if new != z[b]:
            z[b] = new
            changed += 1
    return changed


def _python_sweep(h, data, model, hp, z, order, best_u):
    changed = violations = 0
    for b in order:
        b = int(b)
        old = int(z[b])
        if old != 0:
            u_old = vertex_energy(h, data, model, hp, z, b, old)
        elif hp.threshold is not None:
            u_old = outlier_energy(hp)
        else:
            u_old = math.inf
        k, u = best_normal_label(h, data, model, hp, z, b)
        best_u[b] = u
        new, u_new = k, u
        if hp.threshold is not None and outlier_energy(hp) < u:
            new, u_new = 0, outlier_energy(hp)
        if u_new > u_old:
            violations += 1
        if new != old:
            z[b] = new
            changed += 1
    return changed, violations


def icm_infer(h: Hmrf, data: Observations, model: CommunityModel, hp: Hyperparams, z_init,
              debug: bool = False, rng: np.random.Generator | None = None) -> IcmResult:
    """Sequentially relabel vertices until a sweep changes nothing.

    Sweeps visit node-vertices by index, then edge-vertices, unless
    ``hp.random_order`` is set (then ``rng`` permutes every sweep).  In rate
    mode every vertex takes its best normal label during the sweeps and the
    outliers are chosen afterwards from the final best-normal energies.
    """
    nb = h.n_vertices
    z = np.array(z_init, dtype=np.int64, copy=True)
    if z.shape != (nb,):
        raise ValueError(f"label vector has shape {z.shape}, HMRF has {nb} vertices")
    if z.min(initial=0) < 0 or z.max(initial=0) > hp.K:
        raise ValueError("labels must lie in 0..K")
    if hp.random_order and rng is None:
        rng = np.random.default_rng(hp.seed)

    best_u = np.zeros(nb)
    threshold_mode = hp.threshold is not None
    a0 = float(hp.threshold) if threshold_mode else 0.0
    if not debug:
        neg_node, neg_edge = data_energies(h, data, model)
        args = (h.n_nodes, neg_node, neg_edge, h.incidence_ptr, h.incidence, h.endpoints,
                h.w_node_node, h.w_i_edge, h.w_j_edge, h.w_triangle,
                float(hp.lambda1), float(hp.lambda2), float(hp.lambda3),
                hp.psi_mode == "literal", h.with_edge_vertices, threshold_mode, a0, best_u)

    order = np.arange(nb, dtype=np.int64)
    violations = 0
    converged = False
    sweeps = 0
    while sweeps < hp.max_sweeps:
        if hp.random_order:
            order = rng.permutation(nb).astype(np.int64)
        sweeps += 1
        if debug:
            changed, bad = _python_sweep(h, data, model, hp, z, order, best_u)
            violations += bad
        else:
            changed = _sweep(z, order, *args)
        if changed == 0:
            converged = True
            break

    if hp.rate is not None:
        n = h.n_nodes
        node_out, edge_out = select_outliers_by_rate(best_u[:n], best_u[n:], hp.rate)
        z[node_out] = 0
        z[n + edge_out] = 0
    return IcmResult(labels=z, sweeps=sweeps, converged=converged, best_energy=best_u,
                     violations=violations)
