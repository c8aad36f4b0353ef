"""
이종(heterogeneous) 에이전트 출력 동기화

- 리더 데이터 수집 / rank 조건
- data-based regulator equation 풀이 (S_i -> Pi_i, Gamma_i)
- dynamic controller: zeta 동역학, 주기 경계 재계산, 제어 입력
"""

from __future__ import annotations

from typing import Dict, Optional, Tuple

import numpy as np

from core.config.settings import get_settings
from core.constants import (
    IMAG_AXIS_TOL,
    LEADER_MAX_REDRAWS,
    REGULATOR_TOL,
    REPRESENTATION_TOL,
)
from core.datarep import sample_indices
from core.logging.logger import get_logger
from core.lti import build_data_matrices, simulate, steps_for
from core.types import (
    AgentData,
    DimensionError,
    DynamicController,
    ExperimentData,
    LeaderData,
    LtiSystem,
    PcpeError,
    RegulatorError,
    RegulatorSolution,
    RepresentationError,
    numeric_rank,
)
from core.utils.linalg import min_norm_solve, relative_residual

logger = get_logger(__name__)


# ============================================
# 리더 데이터
# ============================================

def leader_rank_check(leader: LeaderData) -> bool:
    """rank(Hx0(t)) == n0 at t = 0 and the further sampled t of [0, T)."""
    q = int(round(leader.T / leader.h))
    for s in sample_indices(q):
        if numeric_rank(leader.Hx0[s]) != leader.n0:
            logger.info("leader rank check failed at t=%.4g", s * leader.h)
            return False
    return True


def collect_leader_experiment(
    leader: LtiSystem,
    T: Optional[float] = None,
    M0: Optional[int] = None,
    seed: int = 0,
    h: Optional[float] = None,
) -> ExperimentData:
    """Record the autonomous leader from a seeded random x0(0); redraw on rank failure."""
    settings = get_settings()
    T = settings.hold_period if T is None else T
    h = settings.step if h is None else h
    M0 = leader.n + 2 if M0 is None else M0
    steps_for(T, h, what="T")
    autonomous = LtiSystem(A=leader.A, B=None, C=leader.C)

    rng = np.random.default_rng([seed, 2])
    for attempt in range(LEADER_MAX_REDRAWS):
        x0 = rng.uniform(-1.0, 1.0, size=leader.n)
        traj = simulate(autonomous, x0, None, duration=M0 * T, h=h)
        matrices = build_data_matrices(traj, T, M0)
        if leader_rank_check(LeaderData.from_matrices(matrices)):
            logger.info("leader data collected: n0=%d M0=%d (attempt %d)", leader.n, M0, attempt)
            return ExperimentData(pcpe=None, trajectory=traj, matrices=matrices, seed=seed)
        logger.warning("leader data rank-deficient (attempt %d), redrawing x0(0)", attempt)
    raise PcpeError(f"leader data rank condition failed after {LEADER_MAX_REDRAWS} draws")


def collect_leader_data(
    leader: LtiSystem,
    T: Optional[float] = None,
    M0: Optional[int] = None,
    seed: int = 0,
    h: Optional[float] = None,
) -> LeaderData:
    return LeaderData.from_matrices(collect_leader_experiment(leader, T, M0, seed, h).matrices)


def check_leader_assumption(A0) -> bool:
    """Every eigenvalue of A0 on the imaginary axis."""
    eig = np.linalg.eigvals(np.atleast_2d(np.asarray(A0, dtype=float)))
    return bool(np.all(np.abs(eig.real) <= IMAG_AXIS_TOL))


# ============================================
# Regulator equations
# ============================================

def regulator_system(data: AgentData, leader: LeaderData) -> Tuple[np.ndarray, np.ndarray, int]:
    """Stacked linear system in vec(S) (column-major) for both data equations."""
    Hx, Hdx, Hy = data.Hx0, data.Hdx0, data.Hy0
    X0, dX0, Y0 = leader.Hx0[0], leader.Hdx0[0], leader.Hy0[0]
    if Hy.shape[0] != Y0.shape[0]:
        raise DimensionError(f"agent output dimension {Hy.shape[0]} differs from leader {Y0.shape[0]}")
    # vec(A S B) = (B' kron A) vec(S)
    dyn = np.kron(X0.T, Hdx) - np.kron(dX0.T, Hx)
    out = np.kron(X0.T, Hy)
    A = np.vstack([dyn, out])
    b = np.concatenate([np.zeros(dyn.shape[0]), Y0.reshape(-1, order="F")])
    return A, b, dyn.shape[0]


def solve_regulator(data: AgentData, leader: LeaderData) -> RegulatorSolution:
    """Minimum-norm S_i solving both data equations exactly; Pi = Hx(0) S, Gamma = Hu S."""
    A, b, split = regulator_system(data, leader)
    vec_s, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = relative_residual(A, vec_s, b)
    if residual > REGULATOR_TOL:
        raise RegulatorError(
            f"regulator data equations have no exact solution (relative residual {residual:.3e}); "
            "output synchronization is not achievable with this controller",
            residual=residual,
        )
    S = vec_s.reshape(data.M, leader.n0, order="F")
    r = A @ vec_s - b
    res_dyn = float(np.linalg.norm(r[:split]))
    res_out = float(np.linalg.norm(r[split:]) / (1.0 + np.linalg.norm(b[split:])))
    Pi = data.Hx0 @ S
    Gamma = data.Hu @ S
    logger.info("regulator solved: residual=%.2e", residual)
    return RegulatorSolution(S=S, Pi=Pi, Gamma=Gamma, residual_dynamics=res_dyn, residual_output=res_out)


def verify_regulator_model(sol: RegulatorSolution, sys: LtiSystem, leader: LtiSystem) -> Tuple[float, float]:
    """(||A Pi + B Gamma - Pi A0||, ||C Pi - C0||)."""
    dyn = sys.A @ sol.Pi + sys.B @ sol.Gamma - sol.Pi @ leader.A
    out = sys.C @ sol.Pi - leader.C
    return float(np.linalg.norm(dyn)), float(np.linalg.norm(out))


# ============================================
# Dynamic controller
# ============================================

def _anchor(leader: LeaderData, zeta: np.ndarray) -> Tuple[np.ndarray, float]:
    X0 = leader.Hx0[0]
    if numeric_rank(X0) != leader.n0:
        raise RepresentationError("leader data matrix Hx0(0) is rank deficient", residual=float("inf"))
    alpha = min_norm_solve(X0, zeta, REPRESENTATION_TOL, what="leader replay vector")
    return alpha, relative_residual(X0, alpha, zeta)


def init_controller(
    sol: RegulatorSolution,
    K,
    zeta0,
    leader: LeaderData,
    agent: int = 0,
    neighbors: Optional[Dict[int, float]] = None,
    pin_gain: float = 0.0,
) -> DynamicController:
    zeta0 = np.asarray(zeta0, dtype=float).reshape(-1)
    if zeta0.shape != (leader.n0,):
        raise DimensionError(f"zeta0 must have {leader.n0} entries, got {zeta0.shape}")
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (sol.Gamma.shape[0], sol.Pi.shape[0]):
        raise DimensionError(f"K_i must be {(sol.Gamma.shape[0], sol.Pi.shape[0])}, got {K.shape}")
    alpha, res = _anchor(leader, zeta0)
    return DynamicController(
        agent=agent,
        K=K,
        Pi=sol.Pi,
        Gamma=sol.Gamma,
        zeta=zeta0,
        alpha_bar=alpha,
        k=0,
        neighbors=dict(neighbors or {}),
        pin_gain=pin_gain,
        leader=leader,
        reconstruction_residual=res,
    )


def zeta_derivative(
    ctrl: DynamicController,
    t: float,
    zeta,
    neighbor_zetas: Optional[Dict[int, np.ndarray]] = None,
    x0_t=None,
) -> np.ndarray:
    """Hdx0(t - kT) alpha_bar - sum_j a_ij (zeta - zeta_j) - g_i (zeta - x0)."""
    s = ctrl.leader.index_of(t - ctrl.period_start)
    zeta = np.asarray(zeta, dtype=float)
    out = ctrl.leader.Hdx0[s] @ ctrl.alpha_bar
    neighbor_zetas = neighbor_zetas or {}
    for j, a_ij in ctrl.neighbors.items():
        if j not in neighbor_zetas:
            raise DimensionError(f"controller {ctrl.agent} is missing neighbor zeta {j}")
        out = out - a_ij * (zeta - neighbor_zetas[j])
    if ctrl.pin_gain > 0:
        if x0_t is None:
            raise DimensionError(f"pinned controller {ctrl.agent} needs the leader state")
        out = out - ctrl.pin_gain * (zeta - np.asarray(x0_t, dtype=float))
    return out


def on_period_boundary(ctrl: DynamicController, zeta_at_kT) -> DynamicController:
    """Re-anchor alpha_bar on zeta(kT) and restart the local data index."""
    zeta = np.asarray(zeta_at_kT, dtype=float).reshape(-1)
    alpha, res = _anchor(ctrl.leader, zeta)
    logger.debug("controller %d: boundary k=%d, residual=%.2e", ctrl.agent, ctrl.k + 1, res)
    return ctrl.model_copy(
        update={"zeta": zeta, "alpha_bar": alpha, "k": ctrl.k + 1, "reconstruction_residual": res}
    )


def control_input(ctrl: DynamicController, x_i, zeta=None) -> np.ndarray:
    """u_i = -K_i (x_i - Pi_i zeta_i) + Gamma_i zeta_i."""
    zeta = ctrl.zeta if zeta is None else np.asarray(zeta, dtype=float)
    x_i = np.asarray(x_i, dtype=float)
    return -ctrl.K @ (x_i - ctrl.Pi @ zeta) + ctrl.Gamma @ zeta
