"""Small builders shared by the unit tests."""

import numpy as np

from hcoda.energy import Observations
from hcoda.graph import AttributedGraph
from hcoda.likelihood import CommunityModel


class FixedBlock:
    """Returns the same log-likelihood row for every data vector."""

    def __init__(self, row):
        self.row = np.asarray(row, dtype=float)

    @property
    def n_communities(self):
        return len(self.row)

    @property
    def dim(self):
        return 1

    def log_lik_matrix(self, X):
        return np.tile(self.row, (len(X), 1))


def graph(n, edges, strengths=None):
    strengths = strengths or [1.0] * len(edges)
    return AttributedGraph.from_records(
        [(i, [0.0]) for i in range(n)],
        [(a, b, w, [0.0]) for (a, b), w in zip(edges, strengths)])


def fixed_model(node_row, edge_row=None):
    edge = FixedBlock(edge_row if edge_row is not None else node_row)
    return CommunityModel(FixedBlock(node_row), 1.0, edge, 1.0)


def obs(g):
    return Observations(g.node_data, g.edge_data)
