import itertools

import networkx as nx
import numpy as np
import pytest

from hcoda.graph import (
    AttributedGraph,
    GraphError,
    build_hmrf,
    cooccurrence_triangle_weights,
    inverse_degree_node_edge_weights,
    neighbors_edge,
    neighbors_node,
    strength_pair_stats,
    validate_graph,
)


def make_graph(n, edges, p=2, q=2, strengths=None):
    nodes = [(i, np.zeros(p)) for i in range(n)]
    strengths = strengths or [1.0] * len(edges)
    return AttributedGraph.from_records(nodes, [(a, b, w, np.zeros(q)) for (a, b), w in zip(edges, strengths)])


def path3():
    return make_graph(3, [(0, 1), (1, 2)])


def test_well_formed_graph_validates():
    assert validate_graph(path3()).ok


def test_self_loop_reported():
    g = make_graph(3, [(0, 1), (1, 1)])
    assert any(v.startswith("self-loop") for v in validate_graph(g).violations)


def test_short_node_vector_reported():
    nodes = [(0, np.zeros(2)), (1, np.zeros(1)), (2, np.zeros(2))]
    g = AttributedGraph.from_records(nodes, [(0, 1, 1.0, np.zeros(2))])
    assert any(v.startswith("attribute length") for v in validate_graph(g).violations)


@pytest.mark.parametrize("edges,strengths,needle", [
    ([(0, 1), (1, 0)], [1.0, 1.0], "duplicate edge"),
    ([(0, 7)], [1.0], "dangling endpoint"),
    ([(0, 1)], [0.0], "non-positive strength"),
    ([(0, 1)], [-2.0], "non-positive strength"),
])
def test_structural_violations(edges, strengths, needle):
    g = make_graph(3, edges, strengths=strengths)
    assert any(needle in v for v in validate_graph(g).violations)


def test_counts_kind_rejects_fractions():
    g = AttributedGraph.from_records([(0, [1, 2]), (1, [0.5, 1])], [], node_kind="counts")
    assert not validate_graph(g).ok


def test_endpoints_are_sorted_positions():
    g = AttributedGraph.from_records(
        [("c", [0.0]), ("a", [0.0]), ("b", [0.0])],
        [("b", "c", 1.0, [0.0]), ("a", "b", 1.0, [0.0])])
    assert g.endpoints.tolist() == [[0, 2], [1, 2]]


def test_sizes_three_nodes_two_edges():
    h = build_hmrf(path3())
    assert h.n_vertices == 5
    assert h.weight_count == 8


def test_sizes_no_edges():
    h = build_hmrf(make_graph(4, []))
    assert h.n_vertices == 4
    assert h.weight_count == 0


def test_path_inverse_degree_weights():
    # path 1-2-3 as positions 0-1-2: edge (0,1) has deg(0)=1, deg(1)=2
    h = build_hmrf(path3())
    assert h.node_edge_weight(1, 0) == 0.5
    assert h.node_edge_weight(0, 0) == 1.0


def test_inverse_degree_star():
    g = make_graph(6, [(0, leaf) for leaf in range(1, 6)])
    w_center, w_leaf = inverse_degree_node_edge_weights(g)
    assert np.allclose(w_center, 0.2)
    assert np.allclose(w_leaf, 1.0)


def test_inverse_degree_four():
    g = make_graph(5, [(0, j) for j in range(1, 5)])
    assert inverse_degree_node_edge_weights(g)[0][0] == 0.25


def test_uniform_scheme_and_unknown_scheme():
    h = build_hmrf(path3(), scheme="uniform")
    assert np.all(h.w_i_edge == 1.0) and np.all(h.w_j_edge == 1.0)
    with pytest.raises(GraphError):
        build_hmrf(path3(), scheme="bogus")
    with pytest.raises(GraphError):
        build_hmrf(path3(), triangle="bogus")


def test_strength_copied_to_node_node_weight():
    g = make_graph(3, [(0, 1), (1, 2)], strengths=[2.5, 0.5])
    assert build_hmrf(g).w_node_node.tolist() == [2.5, 0.5]


def test_cooccurrence_ratios():
    g = make_graph(3, [(0, 1), (1, 2)])
    assert cooccurrence_triangle_weights(g, [(3, 10), (4, 4)]).tolist() == [0.3, 1.0]
    assert cooccurrence_triangle_weights(g).tolist() == [1.0, 1.0]
    with pytest.raises(GraphError):
        cooccurrence_triangle_weights(g, [(5, 4), (1, 1)])


def test_strength_ratio_is_weighted_jaccard():
    # node 1 has total strength 3, node 0 has 1, node 2 has 2
    g = make_graph(3, [(0, 1), (1, 2)], strengths=[1.0, 2.0])
    stats = strength_pair_stats(g)
    assert stats.tolist() == [[1.0, 3.0], [2.0, 3.0]]
    h = build_hmrf(g, triangle="strength_ratio")
    assert np.allclose(h.w_triangle, [1 / 3, 2 / 3])
    assert np.allclose(build_hmrf(g).w_triangle, 1.0)


def test_incidence_lists_cover_every_edge_twice():
    g = nx.gnm_random_graph(30, 60, seed=4)
    ag = make_graph(30, list(g.edges()))
    h = build_hmrf(ag)
    for i in range(30):
        inc = set(h.incident(i).tolist())
        assert inc == {e for e, (a, b) in enumerate(h.endpoints) if i in (a, b)}
    assert np.all(h.w_triangle >= 0) and np.all(h.w_i_edge > 0)


def test_neighbors_node_outlier_is_empty():
    h = build_hmrf(path3())
    assert neighbors_node(h, 0, [0, 1, 1, 1, 1]) == set()


def test_neighbors_node_path_all_ones():
    h = build_hmrf(make_graph(2, [(0, 1)]))
    # vertices: v0, v1, e01 = 2
    assert neighbors_node(h, 0, [1, 1, 1]) == {1, 2}


def test_neighbors_node_drops_outlier_neighbor():
    h = build_hmrf(make_graph(2, [(0, 1)]))
    assert neighbors_node(h, 0, [1, 0, 1]) == {2}
    assert neighbors_node(h, 0, [1, 0, 0]) == set()


def test_neighbors_edge_cases():
    h = build_hmrf(make_graph(2, [(0, 1)]))
    assert neighbors_edge(h, 2, [2, 2, 0]) == set()
    assert neighbors_edge(h, 2, [2, 2, 2]) == {0, 1}
    assert neighbors_edge(h, 2, [0, 3, 1]) == {1}


def small_graphs():
    for g in nx.graph_atlas_g()[1:]:
        if g.number_of_nodes() + g.number_of_edges() > 6:
            continue
        yield g


def test_neighborhood_toggling_exhaustive():
    for g in small_graphs():
        ag = make_graph(g.number_of_nodes(), list(g.edges()))
        h = build_hmrf(ag)
        nb = h.n_vertices
        for z in itertools.product((0, 1), repeat=nb):
            z = list(z)
            for b in range(nb):
                for v in range(nb):
                    if v == b:
                        continue
                    on = z.copy(); on[v] = 1
                    off = z.copy(); off[v] = 0
                    get = neighbors_node if b < h.n_nodes else neighbors_edge
                    assert v not in get(h, b, off)
                    # turning v back on restores exactly the clique links of b
                    linked = v in get(h, b, [1] * nb)
                    assert (v in get(h, b, on)) == (linked and on[b] != 0)


def test_node_node_symmetry():
    g = nx.gnm_random_graph(12, 25, seed=1)
    h = build_hmrf(make_graph(12, list(g.edges())))
    z = [1] * h.n_vertices
    for i in range(12):
        for j in neighbors_node(h, i, z):
            if j < h.n_nodes:
                assert i in neighbors_node(h, j, z)


def test_with_edge_vertices_off_drops_edge_neighbors():
    h = build_hmrf(path3(), with_edge_vertices=False)
    assert h.n_vertices == 3
    assert neighbors_node(h, 1, [1, 1, 1]) == {0, 2}
