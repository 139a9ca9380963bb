import numpy as np
import pytest

from graphrf import (
    FeatureProvider,
    connectivity_provider,
    erdos_renyi,
    load_edge_list,
    matrix_provider,
    power_adjacency,
    power_provider,
)


@pytest.fixture
def graph():
    return erdos_renyi(10, 0.4, seed=0)


class TestConnectivityProvider:
    def test_column_matches_adjacency(self, graph):
        provider = connectivity_provider(graph)
        for node in range(10):
            np.testing.assert_array_equal(provider(node), graph.adjacency[:, node])

    def test_row_mode_on_directed(self):
        g = load_edge_list(["a b", "b c"], directed=True)
        provider = connectivity_provider(g, mode="row")
        np.testing.assert_array_equal(provider(0), g.adjacency[0, :])

    def test_concat_dimension(self, graph):
        provider = connectivity_provider(graph, mode="concat")
        assert provider.dim == 20
        assert provider(3).size == 20

    def test_restriction_to_anchor_set(self, graph):
        anchors = np.array([1, 4, 7])
        provider = connectivity_provider(graph, restrict_to=anchors)
        assert provider.dim == 3
        np.testing.assert_array_equal(provider(0), graph.adjacency[anchors, 0])

    def test_normalization(self, graph):
        provider = connectivity_provider(graph, normalize=True)
        for node in range(10):
            norm = np.linalg.norm(provider(node))
            assert norm == pytest.approx(1.0) or norm == 0.0


class TestPowerProvider:
    def test_matches_matrix_power(self, graph):
        provider = power_provider(graph, hops=2)
        powered = power_adjacency(graph, 2)
        for node in range(10):
            np.testing.assert_array_equal(provider(node), powered[:, node])

    def test_one_hop_equals_connectivity(self, graph):
        hop = power_provider(graph, hops=1)
        conn = connectivity_provider(graph)
        for node in range(10):
            np.testing.assert_array_equal(hop(node), conn(node))


class TestMatrixProvider:
    def test_reads_rows(self):
        feats = np.arange(12.0).reshape(4, 3)
        provider = matrix_provider("ext", feats)
        np.testing.assert_array_equal(provider(2), [6.0, 7.0, 8.0])

    def test_declared_dim_enforced(self):
        provider = FeatureProvider("bad", lambda node: np.zeros(3), dim=4)
        with pytest.raises(ValueError, match="declared dim"):
            provider(0)
