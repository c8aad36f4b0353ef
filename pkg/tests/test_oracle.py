"""
oracle: 모델 기반 ARE / diagonal S / 동기화 gain (데이터 기반 설계 검증용)
"""

import numpy as np
import pytest
from scipy.linalg import solve_continuous_are

from core.oracle import find_diagonal_S, model_sync_gain, solve_are
from core.topology import parse_graph_section
from core.types import AreError, AssumptionError, Topology
from tests.helpers import random_instances, random_spanning_topology


class TestAre:

    def test_random_systems(self):
        for sys in random_instances(10, seed=5, max_n=4):
            sol = solve_are(sys.A, sys.B)
            assert sol.residual <= 1e-8 * (1.0 + np.linalg.norm(sol.P))
            np.testing.assert_allclose(
                sol.P, solve_continuous_are(sys.A, sys.B, np.eye(sys.n), np.eye(sys.m)), rtol=1e-6, atol=1e-8
            )
            assert np.all(np.linalg.eigvals(sys.A - sys.B @ sol.K).real < 0)

    def test_double_integrator(self):
        sol = solve_are([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]])
        r3 = np.sqrt(3.0)
        np.testing.assert_allclose(sol.P, [[r3, 1.0], [1.0, r3]], atol=1e-10)

    def test_not_stabilizable(self):
        with pytest.raises(AreError):
            solve_are([[1.0, 0.0], [0.0, -1.0]], [[0.0], [1.0]])


class TestDiagonalScaling:

    def test_single_agent(self):
        scaling = find_diagonal_S(Topology(a=[[0.0]], g=[1.0]))
        assert scaling.S[0, 0] == pytest.approx(1.0, abs=1e-5)
        assert scaling.Qbar[0, 0] == pytest.approx(2.0, abs=1e-5)

    def test_example_graph(self, example_topology):
        scaling = find_diagonal_S(example_topology)
        s = np.diag(scaling.S)
        assert np.all(s > 0) and np.all(s <= 1.0 + 1e-6)
        np.testing.assert_array_equal(scaling.S, np.diag(s))
        assert scaling.min_eig > 0

    def test_no_spanning_tree(self):
        with pytest.raises(AssumptionError):
            find_diagonal_S(parse_graph_section(["1 -> 2"], 2))


class TestModelSyncGain:

    def test_random_instances(self):
        rng = np.random.default_rng(17)
        for k, sys in enumerate(random_instances(6, seed=8)):
            top = random_spanning_topology(rng, int(rng.integers(2, 6)))
            gain = model_sync_gain(sys, top)
            assert gain.lyapunov_max_eig <= -1e-9, f"instance {k}"
            assert np.log2(gain.c) == int(np.log2(gain.c))
            n, N = sys.n, top.N
            # block-diagonal certificate
            for i in range(N):
                for j in range(N):
                    if i != j:
                        np.testing.assert_array_equal(gain.P[n * i:n * (i + 1), n * j:n * (j + 1)], 0.0)

    def test_cap_too_small(self, third_order_agents, example_topology):
        # no coupling scalar is tried below c = 1
        with pytest.raises(AreError):
            model_sync_gain(third_order_agents[0], example_topology, c_cap=0)
