"""Edge-attributed graphs and the hidden Markov random field built on them.

The HMRF has one vertex per graph node (node-vertices, indices ``0..n-1``)
followed by one vertex per graph edge (edge-vertices, indices ``n..n+m-1``
in edge order).  Every edge ``(i, j)`` contributes four clique weights:
node-node, node_i-edge, node_j-edge and the triangle ``(i, j, e_ij)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Sequence

import numpy as np

CONTINUOUS = "continuous"
COUNTS = "counts"
ATTRIBUTE_KINDS = (CONTINUOUS, COUNTS)

WEIGHT_SCHEMES = ("inverse_degree", "uniform")
TRIANGLE_SCHEMES = ("constant", "strength_ratio")


class GraphError(ValueError):
    """Raised when a graph fails validation or cannot be turned into an HMRF."""


@dataclass
class AttributedGraph:
    """Undirected graph with attribute vectors on nodes and edges.

    ``edges`` holds pairs of node ids; ``strengths`` and ``edge_attrs`` are
    aligned with it.  Attribute rows may be ragged on input so that
    :func:`validate_graph` can report the problem; the numeric views
    (``node_data``, ``edge_data``, ``endpoints``) assume a valid graph.
    """

    node_ids: list[Hashable]
    node_attrs: Sequence
    edges: list[tuple[Hashable, Hashable]]
    strengths: Sequence[float]
    edge_attrs: Sequence
    node_kind: str = CONTINUOUS
    edge_kind: str = CONTINUOUS

    @classmethod
    def from_records(cls, nodes, edges, node_kind=CONTINUOUS, edge_kind=CONTINUOUS):
        """Build from ``[(id, vec)]`` and ``[(src, dst, strength, vec)]`` records."""
        nodes = list(nodes)
        edges = list(edges)
        return cls(
            node_ids=[n[0] for n in nodes],
            node_attrs=[np.asarray(n[1], dtype=float) for n in nodes],
            edges=[(e[0], e[1]) for e in edges],
            strengths=[float(e[2]) for e in edges],
            edge_attrs=[np.asarray(e[3], dtype=float) for e in edges],
            node_kind=node_kind,
            edge_kind=edge_kind,
        )

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def index(self) -> dict:
        return {nid: pos for pos, nid in enumerate(self.node_ids)}

    @cached_property
    def node_data(self) -> np.ndarray:
        if self.n_nodes == 0:
            return np.zeros((0, 0))
        return np.asarray(np.stack([np.ravel(a) for a in self.node_attrs]), dtype=float)

    @cached_property
    def edge_data(self) -> np.ndarray:
        if self.n_edges == 0:
            return np.zeros((0, 0))
        return np.asarray(np.stack([np.ravel(a) for a in self.edge_attrs]), dtype=float)

    @cached_property
    def endpoints(self) -> np.ndarray:
        """(m, 2) node positions per edge, smaller position first."""
        if self.n_edges == 0:
            return np.zeros((0, 2), dtype=np.int64)
        idx = self.index
        ends = np.array([(idx[a], idx[b]) for a, b in self.edges], dtype=np.int64)
        return np.sort(ends, axis=1)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.endpoints.ravel(), minlength=self.n_nodes)

    def with_edge_attrs(self, edge_attrs) -> "AttributedGraph":
        """Copy of the graph with the edge attribute rows replaced."""
        return AttributedGraph(
            node_ids=list(self.node_ids),
            node_attrs=self.node_attrs,
            edges=list(self.edges),
            strengths=self.strengths,
            edge_attrs=edge_attrs,
            node_kind=self.node_kind,
            edge_kind=self.edge_kind,
        )

    def with_node_attrs(self, node_attrs) -> "AttributedGraph":
        return AttributedGraph(
            node_ids=list(self.node_ids),
            node_attrs=node_attrs,
            edges=list(self.edges),
            strengths=self.strengths,
            edge_attrs=self.edge_attrs,
            node_kind=self.node_kind,
            edge_kind=self.edge_kind,
        )


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_graph(g: AttributedGraph, edge_attributes: bool = True) -> ValidationReport:
    """Check the structural invariants of ``g`` and list every violation.

    With ``edge_attributes=False`` the edge attribute rows are not inspected.
    """
    report = ValidationReport()
    bad = report.violations

    for kind_name, kind in (("node", g.node_kind), ("edge", g.edge_kind)):
        if kind not in ATTRIBUTE_KINDS:
            bad.append(f"unknown {kind_name} attribute kind {kind!r}")

    seen = set()
    for nid in g.node_ids:
        if nid in seen:
            bad.append(f"duplicate node id {nid!r}")
        seen.add(nid)

    if len(g.node_attrs) != g.n_nodes:
        bad.append("node attribute count differs from node count")
    if len(g.strengths) != g.n_edges:
        bad.append("edge strength count differs from edge count")
    if edge_attributes and len(g.edge_attrs) != g.n_edges:
        bad.append("edge attribute count differs from edge count")

    lengths = [np.size(a) for a in g.node_attrs]
    if lengths:
        p = max(set(lengths), key=lengths.count)
        for nid, ln in zip(g.node_ids, lengths):
            if ln != p:
                bad.append(f"attribute length: node {nid!r} has {ln}, expected {p}")
    lengths = [np.size(a) for a in g.edge_attrs] if edge_attributes else []
    if lengths:
        q = max(set(lengths), key=lengths.count)
        for (a, b), ln in zip(g.edges, lengths):
            if ln != q:
                bad.append(f"attribute length: edge ({a!r}, {b!r}) has {ln}, expected {q}")

    pairs = set()
    for (a, b), w in zip(g.edges, g.strengths):
        if a == b:
            bad.append(f"self-loop at node {a!r}")
        for end in (a, b):
            if end not in seen:
                bad.append(f"dangling endpoint {end!r} in edge ({a!r}, {b!r})")
        key = frozenset((a, b))
        if key in pairs:
            bad.append(f"duplicate edge ({a!r}, {b!r})")
        pairs.add(key)
        if not w > 0:
            bad.append(f"non-positive strength {w!r} on edge ({a!r}, {b!r})")

    checks = [("node", g.node_kind, g.node_attrs)]
    if edge_attributes:
        checks.append(("edge", g.edge_kind, g.edge_attrs))
    for kind_name, kind, rows in checks:
        if kind == COUNTS:
            for row in rows:
                row = np.asarray(row, dtype=float)
                if np.any(row < 0) or np.any(row != np.round(row)):
                    bad.append(f"{kind_name} counts must be nonnegative integers")
                    break
    return report


@dataclass
class Hmrf:
    """Vertex index and clique weights of the HMRF.

    ``incidence_ptr``/``incidence`` form a CSR list of incident edge indices
    per node; from an incident edge both the node-node clique and the
    triangle clique are reachable, since there is at most one edge per pair.
    When ``with_edge_vertices`` is false the edge-vertices are dropped from
    the vertex set and only node-node cliques remain (the CODA layout).
    """

    n_nodes: int
    endpoints: np.ndarray
    w_node_node: np.ndarray
    w_i_edge: np.ndarray
    w_j_edge: np.ndarray
    w_triangle: np.ndarray
    incidence_ptr: np.ndarray
    incidence: np.ndarray
    with_edge_vertices: bool = True

    @property
    def n_edges(self) -> int:
        return len(self.endpoints)

    @property
    def n_vertices(self) -> int:
        return self.n_nodes + (self.n_edges if self.with_edge_vertices else 0)

    @property
    def weight_count(self) -> int:
        return 4 * self.n_edges

    def is_edge_vertex(self, b: int) -> bool:
        return b >= self.n_nodes

    def edge_vertex(self, e: int) -> int:
        return self.n_nodes + e

    @cached_property
    def lists(self) -> tuple:
        """Plain-list copies of the arrays for the scalar reference path.

        The weight arrays are treated as immutable once built.
        """
        return (self.endpoints.tolist(), self.w_node_node.tolist(), self.w_i_edge.tolist(),
                self.w_j_edge.tolist(), self.w_triangle.tolist(), self.incidence_ptr.tolist(),
                self.incidence.tolist())

    def incident(self, i: int) -> np.ndarray:
        return self.incidence[self.incidence_ptr[i]:self.incidence_ptr[i + 1]]

    def other_end(self, e: int, i: int) -> int:
        a, b = self.endpoints[e]
        return int(b if a == i else a)

    def node_edge_weight(self, i: int, e: int) -> float:
        return float(self.w_i_edge[e] if self.endpoints[e, 0] == i else self.w_j_edge[e])


def inverse_degree_node_edge_weights(g: AttributedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Per-edge weights ``1/deg(v_i)`` and ``1/deg(v_j)`` for both endpoints."""
    ends = g.endpoints
    deg = g.degrees.astype(float)
    return 1.0 / deg[ends[:, 0]], 1.0 / deg[ends[:, 1]]


def cooccurrence_triangle_weights(g: AttributedGraph, pair_stats=None) -> np.ndarray:
    """Triangle weight per edge: shared/union co-occurrence ratio.

    ``pair_stats`` is a sequence of ``(shared, union)`` aligned with the
    edges; when absent every triangle gets weight 1.0.
    """
    if pair_stats is None:
        return np.ones(g.n_edges)
    stats = np.asarray(pair_stats, dtype=float).reshape(-1, 2)
    if len(stats) != g.n_edges:
        raise GraphError("pair_stats must have one (shared, union) row per edge")
    shared, union = stats[:, 0], stats[:, 1]
    if np.any(shared < 0) or np.any(shared > union) or np.any(union <= 0):
        raise GraphError("pair_stats need 0 <= shared <= union and union > 0")
    return shared / union


def strength_pair_stats(g: AttributedGraph) -> np.ndarray:
    """(shared, union) per edge treating each unit of strength as one joint event.

    shared = w_ij and union = s_i + s_j - w_ij, where s_i is the total
    strength at node i, so the triangle weight is a weighted Jaccard ratio.
    """
    ends = g.endpoints
    w = np.asarray(g.strengths, dtype=float).reshape(g.n_edges)
    total = np.bincount(ends.ravel(), weights=np.repeat(w, 2), minlength=g.n_nodes)
    union = total[ends[:, 0]] + total[ends[:, 1]] - w
    return np.column_stack([w, np.maximum(union, w)])


def build_hmrf(g: AttributedGraph, scheme: str = "inverse_degree", pair_stats=None,
               with_edge_vertices: bool = True, triangle: str = "constant") -> Hmrf:
    if scheme not in WEIGHT_SCHEMES:
        raise GraphError(f"unknown weight scheme {scheme!r}; expected one of {WEIGHT_SCHEMES}")
    if triangle not in TRIANGLE_SCHEMES:
        raise GraphError(f"unknown triangle scheme {triangle!r}; expected one of {TRIANGLE_SCHEMES}")
    if pair_stats is None and triangle == "strength_ratio" and g.n_edges:
        pair_stats = strength_pair_stats(g)
    n, m = g.n_nodes, g.n_edges
    ends = g.endpoints
    if scheme == "inverse_degree":
        w_i, w_j = inverse_degree_node_edge_weights(g)
    else:
        w_i, w_j = np.ones(m), np.ones(m)

    # CSR incidence: edges sorted by node, stable in edge order
    owners = ends.ravel()
    edge_ids = np.repeat(np.arange(m, dtype=np.int64), 2)
    order = np.argsort(owners, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(owners, minlength=n), out=ptr[1:])

    return Hmrf(
        n_nodes=n,
        endpoints=ends,
        w_node_node=np.asarray(g.strengths, dtype=float).reshape(m),
        w_i_edge=np.asarray(w_i, dtype=float),
        w_j_edge=np.asarray(w_j, dtype=float),
        w_triangle=cooccurrence_triangle_weights(g, pair_stats),
        incidence_ptr=ptr,
        incidence=edge_ids[order],
        with_edge_vertices=with_edge_vertices,
    )


def neighbors_node(h: Hmrf, i: int, z) -> set[int]:
    """Neighborhood of node-vertex ``i`` under labels ``z`` (HMRF vertex ids)."""
    if z[i] == 0:
        return set()
    out = set()
    for e in h.incident(i):
        j = h.other_end(e, i)
        if h.w_node_node[e] > 0 and z[j] != 0:
            out.add(j)
        if h.with_edge_vertices:
            ev = h.edge_vertex(e)
            if h.node_edge_weight(i, e) > 0 and z[ev] != 0:
                out.add(ev)
    return out


def neighbors_edge(h: Hmrf, ev: int, z) -> set[int]:
    """Neighborhood of edge-vertex ``ev``: its non-outlier endpoints."""
    if z[ev] == 0:
        return set()
    a, b = h.endpoints[ev - h.n_nodes]
    return {int(v) for v in (a, b) if z[v] != 0}
