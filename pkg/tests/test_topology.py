"""
topology: Laplacian, pinning, leader spanning tree, graph section 파싱
"""

import numpy as np
import pytest

from core.topology import (
    check_spanning_tree_with_leader,
    format_graph_section,
    laplacian,
    parse_graph_section,
    pinning_matrices,
)
from core.types import ScenarioError, Topology
from tests.helpers import random_spanning_topology


class TestLaplacian:

    def test_rows_sum_to_zero(self, example_topology):
        L = laplacian(example_topology)
        np.testing.assert_allclose(L.sum(axis=1), 0.0)

    def test_example_graph(self, example_topology):
        LG = laplacian(example_topology) + np.diag(example_topology.g)
        expected = np.array([
            [1.0, 0.0, 0.0, 0.0],
            [-1.0, 1.0, 0.0, 0.0],
            [-1.0, -1.0, 2.0, 0.0],
            [0.0, 0.0, -1.0, 1.0],
        ])
        np.testing.assert_array_equal(LG, expected)

    def test_pinning_matrices(self, example_topology):
        G, L_g, I_g = pinning_matrices(example_topology)
        np.testing.assert_array_equal(np.diag(G), [1.0, 0.0, 0.0, 0.0])
        assert L_g.shape == (4, 5)
        # delta = L_g [x0; x] vanishes on consensus with the leader
        np.testing.assert_allclose(L_g @ np.ones(5), 0.0)
        np.testing.assert_array_equal(I_g[:, 0], 0.0)
        np.testing.assert_array_equal(I_g[:, 1:], np.eye(4))


class TestSpanningTree:

    def test_example_graph_is_reached(self, example_topology):
        report = check_spanning_tree_with_leader(example_topology)
        assert report
        assert report.nonsingular
        assert report.sigma_min > 0

    def test_unpinned_graph(self):
        top = parse_graph_section(["1 -> 2", "2 -> 1"], 2)
        report = check_spanning_tree_with_leader(top)
        assert not report
        assert report.unreached == [1, 2]
        assert not report.nonsingular

    def test_isolated_agent(self):
        top = parse_graph_section(["pin 1", "1 -> 2"], 3)
        report = check_spanning_tree_with_leader(top)
        assert not report.has_spanning_tree
        assert report.unreached == [3]

    def test_single_pinned_agent(self):
        top = Topology(a=[[0.0]], g=[1.0])
        report = check_spanning_tree_with_leader(top)
        assert report.has_spanning_tree
        assert report.sigma_min == pytest.approx(1.0)

    def test_random_spanning_trees_are_nonsingular(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            top = random_spanning_topology(rng, int(rng.integers(2, 7)))
            report = check_spanning_tree_with_leader(top)
            assert report.has_spanning_tree
            assert report.nonsingular
            assert report.sigma_min > 1e-12
            LG = laplacian(top) + np.diag(top.g)
            assert np.linalg.svd(LG, compute_uv=False).min() > 1e-12


class TestGraphSection:

    def test_default_weights_and_comments(self):
        top = parse_graph_section(["# ring", "1 -> 2", "2 -> 1 : 0.5", "pin 2 : 3"], 2)
        np.testing.assert_array_equal(top.a, [[0.0, 0.5], [1.0, 0.0]])
        np.testing.assert_array_equal(top.g, [0.0, 3.0])

    def test_format_parses_back(self, example_topology):
        again = parse_graph_section(format_graph_section(example_topology), 4)
        np.testing.assert_array_equal(again.a, example_topology.a)
        np.testing.assert_array_equal(again.g, example_topology.g)

    @pytest.mark.parametrize("line", ["1 -> 5", "pin 0", "1 => 2", "1 -> 1"])
    def test_rejects_bad_lines(self, line):
        with pytest.raises(ScenarioError):
            parse_graph_section([line], 4)

    def test_rejects_negative_weight(self):
        with pytest.raises(ScenarioError):
            parse_graph_section(["1 -> 2 : -1"], 2)
