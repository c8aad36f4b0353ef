"""
closedloop: 동종/이종 네트워크 시뮬레이션과 metrics
"""

import numpy as np
import pytest

from core.closedloop import run_heterogeneous, run_homogeneous, settling_time, substeps_for
from core.constants import MAX_SUBSTEPS, RK4_STABILITY_RADIUS
from core.hetero import init_controller, solve_regulator
from core.lmi import closed_loop_matrix, design_single_stabilizer, verify_hurwitz
from core.oracle import solve_are
from core.types import AlignmentError, DivergenceError, LtiSystem
from tests.helpers import random_instances


class TestSettlingTime:

    def test_zero_initial_error(self):
        assert settling_time(np.arange(3.0), np.zeros(3)) == 0.0

    def test_first_time_inside_band(self):
        t = np.arange(5.0)
        e = np.array([1.0, 0.5, 0.2, 0.005, 0.001])
        assert settling_time(t, e) == 3.0

    def test_never_settles(self):
        assert settling_time(np.arange(3.0), np.array([1.0, 1.0, 1.0])) is None


class TestHomogeneousRun:

    def test_synchronized_start_stays_synchronized(self, third_order_agents, example_topology):
        sys = third_order_agents[0]
        x0 = np.array([0.3, -0.2, 0.1])
        run = run_homogeneous(sys, example_topology, [np.ones((1, 3))] * 4, np.tile(x0, 4), x0, duration=5.0, h=0.01)
        assert run.metrics.settling_time == 0.0
        assert run.metrics.synchronized
        assert np.max(run.error_norm) <= 1e-12

    def test_zero_gains_do_not_synchronize(self, third_order_agents, example_topology):
        sys = third_order_agents[0]
        rng = np.random.default_rng(3)
        run = run_homogeneous(
            sys, example_topology, np.zeros((4, 12)),
            rng.uniform(-1, 1, size=(4, 3)), rng.uniform(-1, 1, size=3), duration=10.0, h=0.01,
        )
        assert not run.metrics.synchronized
        assert run.metrics.derivative_consistent
        assert run.errors.shape == (1001, 4, 3)
        assert len(run.agents) == 4 and run.leader.shape == (1001, 3)

    def test_stiff_gain_is_substepped(self, third_order_agents, example_topology):
        sys = third_order_agents[0]
        # LQR gains keep A - lambda B K Hurwitz for every lambda >= 1/2
        K = 500.0 * solve_are(sys.A, sys.B).K
        Ac = closed_loop_matrix(sys, example_topology, [K] * 4)
        assert verify_hurwitz(Ac)[0]
        h = 0.01
        assert h * np.max(np.abs(np.linalg.eigvals(Ac))) > RK4_STABILITY_RADIUS
        rng = np.random.default_rng(5)
        run = run_homogeneous(
            sys, example_topology, [K] * 4,
            rng.uniform(-1, 1, size=(4, 3)), rng.uniform(-1, 1, size=3), duration=10.0, h=h,
        )
        assert np.all(np.isfinite(run.error_norm))
        assert run.error_norm[-1] < run.error_norm[0]

    def test_substeps(self):
        assert substeps_for(np.diag([-1.0, -2.0]), 0.01) == 1
        assert substeps_for(np.diag([-1000.0]), 0.01) == 4
        assert substeps_for(np.diag([-1e9]), 0.01) == MAX_SUBSTEPS

    def test_destabilizing_gain_diverges(self, third_order_agents, example_topology):
        sys = third_order_agents[0]
        with pytest.raises(DivergenceError) as err:
            run_homogeneous(
                sys, example_topology, -1e6 * np.ones((4, 12)),
                np.ones((4, 3)), np.zeros(3), duration=1.0, h=0.01,
            )
        assert 0.0 < err.value.time <= 1.0


class TestHeterogeneousRun:

    @pytest.fixture(scope="class")
    def controllers(self, agent_data, leader_data, example_topology):
        def build(zeta0s):
            out = []
            for i, data in enumerate(agent_data):
                sol = solve_regulator(data, leader_data)
                K = design_single_stabilizer(data).K
                neighbors = {j: float(example_topology.a[i, j]) for j in range(4) if example_topology.a[i, j] > 0}
                out.append(
                    init_controller(sol, K, zeta0s[i], leader_data, agent=i, neighbors=neighbors,
                                    pin_gain=float(example_topology.g[i]))
                )
            return out
        return build

    def test_invariant_start(self, controllers, third_order_agents, example_leader, example_topology):
        x0 = np.array([0.5, -0.2])
        ctrls = controllers([x0] * 4)
        x_init = [c.Pi @ x0 for c in ctrls]
        run = run_heterogeneous(third_order_agents, example_leader, example_topology, ctrls, x_init, x0, duration=3.7)
        assert run.metrics.boundary_count == 9
        assert run.metrics.max_boundary_jump <= 1e-8
        assert np.max(run.error_norm) <= 1e-6

    def test_random_start_shapes(self, controllers, third_order_agents, example_leader, example_topology):
        rng = np.random.default_rng(1)
        ctrls = controllers([np.zeros(2)] * 4)
        x_init = [rng.uniform(-1, 1, size=3) for _ in range(4)]
        run = run_heterogeneous(third_order_agents, example_leader, example_topology, ctrls, x_init,
                                rng.uniform(-1, 1, size=2), duration=3.7)
        assert run.kind == "heterogeneous"
        assert run.errors.shape == (1851, 4, 1)
        assert len(run.zetas) == 4 and run.zetas[0].shape == (1851, 2)
        assert run.metrics.check_time == pytest.approx(3.7)
        assert run.metrics.initial_error > 0

    def test_duration_must_align_with_double_step(self, controllers, third_order_agents, example_leader, example_topology):
        ctrls = controllers([np.zeros(2)] * 4)
        with pytest.raises(AlignmentError):
            run_heterogeneous(third_order_agents, example_leader, example_topology, ctrls, [np.zeros(3)] * 4,
                              np.zeros(2), duration=3.701)

    def test_step_outside_rk4_region_is_rejected(self, controllers, third_order_agents, example_leader, example_topology):
        ctrls = [c.model_copy(update={"K": np.array([[1e4, 1e4, 1e4]])}) for c in controllers([np.zeros(2)] * 4)]
        with pytest.raises(DivergenceError) as err:
            run_heterogeneous(third_order_agents, example_leader, example_topology, ctrls, [np.zeros(3)] * 4,
                              np.zeros(2), duration=3.7)
        assert err.value.time == 0.0


class TestSettlingAgreement:

    def test_settling_follows_abscissa_sign(self, example_topology):
        # zero gains: A_c = I (x) A, so the shift alone fixes the sign of the abscissa
        for i, sys in enumerate(random_instances(10, seed=33)):
            base = np.max(np.linalg.eigvals(sys.A).real)
            shift = -(base + 0.5) if i % 2 == 0 else (0.5 - base)
            A = sys.A + shift * np.eye(sys.n)
            shifted = LtiSystem(A=A, B=sys.B, C=sys.C)
            K = np.zeros((sys.m * 4, sys.n * 4))
            _, abscissa = verify_hurwitz(closed_loop_matrix(shifted, example_topology, K))
            rng = np.random.default_rng(i)
            run = run_homogeneous(
                shifted, example_topology, K,
                rng.uniform(-1, 1, size=(4, sys.n)), rng.uniform(-1, 1, size=sys.n), duration=30.0, h=0.01,
            )
            settled = run.metrics.settling_time is not None
            assert settled == (abscissa < 0), f"instance {i}: abscissa {abscissa}"
