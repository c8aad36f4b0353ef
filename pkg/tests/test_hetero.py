"""
hetero: 리더 데이터, data-based regulator equations, dynamic controller
"""

import numpy as np
import pytest
from scipy.linalg import expm

from core.hetero import (
    check_leader_assumption,
    collect_leader_data,
    control_input,
    init_controller,
    leader_rank_check,
    on_period_boundary,
    solve_regulator,
    verify_regulator_model,
    zeta_derivative,
)
from core.lti import build_data_matrices, generate_pcpe, rk4_step, simulate
from core.types import (
    AgentData,
    DimensionError,
    LtiSystem,
    PeriodWindowError,
    RegulatorError,
)
from data.scenarios import EXAMPLE_AGENT_CONSTANTS

EXPECTED_PI = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])


class TestLeader:

    def test_rank_condition(self, leader_data):
        assert leader_data.n0 == 2
        assert leader_rank_check(leader_data)
        # closed window [0, T]
        assert leader_data.window == 371

    def test_seeded_collection_is_deterministic(self, example_leader, leader_data):
        again = collect_leader_data(example_leader, T=0.37, seed=0, h=1e-3)
        np.testing.assert_array_equal(again.Hx0, leader_data.Hx0)

    def test_marginally_stable_assumption(self, example_leader):
        assert check_leader_assumption(example_leader.A)
        assert check_leader_assumption([[0.0, 2.0], [-2.0, 0.0]])
        assert not check_leader_assumption([[-1.0]])


class TestRegulator:

    def test_example_agents(self, third_order_agents, example_leader, agent_data, leader_data):
        for (a, b, c, d), sys, data in zip(EXAMPLE_AGENT_CONSTANTS, third_order_agents, agent_data):
            sol = solve_regulator(data, leader_data)
            res_dyn, res_out = verify_regulator_model(sol, sys, example_leader)
            assert res_dyn <= 1e-6 and res_out <= 1e-6
            np.testing.assert_allclose(sol.Pi, EXPECTED_PI, atol=1e-6)
            np.testing.assert_allclose(sol.Gamma, [[0.0, b / d]], atol=1e-6)

    def test_unsolvable_equations(self, leader_data):
        # input has no effect: the stable state cannot follow a ramp
        sys = LtiSystem(A=[[-1.0]], B=[[0.0]], C=[[1.0]])
        pcpe = generate_pcpe(1, 2, 0.37, 6, seed=0)
        traj = simulate(sys, [0.5], pcpe, duration=6 * 0.37, h=1e-3)
        data = AgentData.from_matrices(build_data_matrices(traj, 0.37, 6))
        with pytest.raises(RegulatorError) as err:
            solve_regulator(data, leader_data)
        assert err.value.residual > 1e-8

    def test_output_dimension_mismatch(self, agent_data, example_leader):
        leader = LtiSystem(A=example_leader.A, C=np.eye(2))
        wide = collect_leader_data(leader, T=0.37, seed=0, h=1e-3)
        with pytest.raises(DimensionError):
            solve_regulator(agent_data[0], wide)


class TestDynamicController:

    @pytest.fixture
    def controller(self, agent_data, leader_data):
        sol = solve_regulator(agent_data[0], leader_data)
        return init_controller(sol, np.zeros((1, 3)), [0.4, -0.3], leader_data)

    def test_isolated_zeta_replays_leader(self, controller, leader_data, example_leader):
        H = 2 * leader_data.h
        per = int(round(leader_data.T / H))
        zeta0 = controller.zeta.copy()
        ctrl, zeta = controller, zeta0
        worst, jumps = 0.0, []
        for k in range(3 * per):
            if k > 0 and k % per == 0:
                ctrl = on_period_boundary(ctrl, zeta)
                jumps.append(ctrl.reconstruction_residual)
            zeta = rk4_step(lambda t, z: zeta_derivative(ctrl, t, z), k * H, zeta, H)
            exact = expm(example_leader.A * (k + 1) * H) @ zeta0
            worst = max(worst, np.linalg.norm(zeta - exact))
        assert ctrl.k == 2
        assert len(jumps) == 2
        assert max(jumps) <= 1e-8
        assert worst <= 1e-6

    def test_consensus_terms(self, controller):
        ctrl = controller.model_copy(update={"neighbors": {1: 2.0}, "pin_gain": 1.0})
        zeta = np.array([1.0, 0.0])
        base = zeta_derivative(controller, 0.0, zeta)
        out = zeta_derivative(ctrl, 0.0, zeta, {1: np.array([0.0, 0.0])}, x0_t=np.array([1.0, 1.0]))
        np.testing.assert_allclose(out, base - 2.0 * zeta - (zeta - np.array([1.0, 1.0])))

    def test_missing_neighbor(self, controller):
        ctrl = controller.model_copy(update={"neighbors": {1: 1.0}})
        with pytest.raises(DimensionError):
            zeta_derivative(ctrl, 0.0, np.zeros(2), {})

    def test_outside_period_window(self, controller, leader_data):
        with pytest.raises(PeriodWindowError):
            zeta_derivative(controller, leader_data.T + 5 * leader_data.h, controller.zeta)

    def test_control_law(self, controller):
        ctrl = controller.model_copy(update={"K": np.array([[1.0, 2.0, 3.0]])})
        zeta = np.array([0.5, 1.0])
        x = np.array([1.0, 1.0, 1.0])
        expected = -ctrl.K @ (x - ctrl.Pi @ zeta) + ctrl.Gamma @ zeta
        np.testing.assert_allclose(control_input(ctrl, x, zeta), expected)

    def test_bad_gain_shape(self, agent_data, leader_data):
        sol = solve_regulator(agent_data[0], leader_data)
        with pytest.raises(DimensionError):
            init_controller(sol, np.zeros((1, 2)), [0.0, 0.0], leader_data)


class TestCoupledZeta:
    """Pinned node 1 and neighbour node 2 (2 <- 1 and 1 <- 2), RK4 at step 2h over three periods."""

    @pytest.fixture
    def pair(self, agent_data, leader_data):
        sol = solve_regulator(agent_data[0], leader_data)

        def build(zeta0s):
            return [
                init_controller(sol, np.zeros((1, 3)), zeta0s[0], leader_data, agent=0, neighbors={1: 0.5}, pin_gain=1.0),
                init_controller(sol, np.zeros((1, 3)), zeta0s[1], leader_data, agent=1, neighbors={0: 1.0}),
            ]
        return build

    @staticmethod
    def integrate(ctrls, x0, A0, leader_data, model_rhs=None):
        """Data-driven pair next to a model-based reference (model_rhs(t, k, zeta_i, anchor_i))."""
        H = 2 * leader_data.h
        per = int(round(leader_data.T / H))
        z = np.concatenate([c.zeta for c in ctrls])
        ref, anchors = z.copy(), [c.zeta.copy() for c in ctrls]
        leader = lambda t: expm(A0 * t) @ x0

        def coupling(c, i, zs, t):
            out = -sum(a * (zs[i] - zs[j]) for j, a in c.neighbors.items())
            return out - c.pin_gain * (zs[i] - leader(t))

        worst, jumps = 0.0, []
        for k in range(3 * per):
            if k > 0 and k % per == 0:
                ctrls = [on_period_boundary(c, z[2 * i:2 * i + 2]) for i, c in enumerate(ctrls)]
                jumps += [c.reconstruction_residual for c in ctrls]
                anchors = [ref[2 * i:2 * i + 2].copy() for i in range(2)]

            def f(t, v):
                zs = [v[0:2], v[2:4]]
                return np.concatenate([
                    zeta_derivative(c, t, zs[i], {j: zs[j] for j in c.neighbors}, x0_t=leader(t))
                    for i, c in enumerate(ctrls)
                ])

            def g(t, v):
                zs = [v[0:2], v[2:4]]
                return np.concatenate([
                    model_rhs(t, k // per, zs[i], anchors[i]) + coupling(c, i, zs, t) for i, c in enumerate(ctrls)
                ])

            z = rk4_step(f, k * H, z, H)
            ref = rk4_step(g, k * H, ref, H)
            worst = max(worst, np.linalg.norm(z - ref))
        return worst, jumps, ctrls

    def test_consensus_manifold_matches_model(self, pair, leader_data, example_leader):
        # zeta_i = x0 for all i: coupling vanishes and zeta' = A0 zeta
        A0 = example_leader.A
        x0 = np.array([0.4, -0.3])
        worst, jumps, ctrls = self.integrate(
            pair([x0, x0]), x0, A0, leader_data, model_rhs=lambda t, k, zeta, anchor: A0 @ zeta,
        )
        assert all(c.k == 2 for c in ctrls)
        assert max(jumps) <= 1e-8
        assert worst <= 1e-6

    def test_disagreement_matches_anchored_model(self, pair, leader_data, example_leader):
        # data term replays A0 exp(A0 (t - kT)) zeta(kT); coupling acts on the current zeta
        A0, T = example_leader.A, leader_data.T
        x0 = np.array([0.4, -0.3])
        worst, jumps, _ = self.integrate(
            pair([np.array([1.0, 0.5]), np.array([-0.5, 0.2])]), x0, A0, leader_data,
            model_rhs=lambda t, k, zeta, anchor: A0 @ expm(A0 * (t - k * T)) @ anchor,
        )
        assert len(jumps) == 4
        assert max(jumps) <= 1e-8
        assert worst <= 1e-6
