"""
Network closed-loop simulation

- homogeneous: u_i = -K_i delta_i, 리더 포함 단일 RK4 적분
- heterogeneous: agent + zeta + leader 를 하나의 ODE 로 적분, 주기 경계마다 alpha_bar 재계산
- 동기화 오차 metric 계산
"""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from core.config.settings import get_settings
from core.constants import (
    DERIVATIVE_CHECK_TOL,
    HETEROGENEOUS_CHECK_TIME,
    HETEROGENEOUS_SYNC_THRESHOLD,
    HOMOGENEOUS_DECAY_RATIO,
    MAX_SUBSTEPS,
    RK4_STABILITY_RADIUS,
    SETTLING_BAND,
)
from core.hetero import control_input, on_period_boundary, zeta_derivative
from core.lmi import closed_loop_matrix, global_gain
from core.logging.logger import get_logger
from core.lti import rk4_step, steps_for
from core.topology import pinning_matrices
from core.types import (
    DimensionError,
    DivergenceError,
    DynamicController,
    LtiSystem,
    NetworkRun,
    RunMetrics,
    Topology,
)

logger = get_logger(__name__)


# ============================================
# metrics
# ============================================

def settling_time(t: np.ndarray, error_norm: np.ndarray, band: float = SETTLING_BAND) -> Optional[float]:
    """First t after which the error stays within band * initial error (None if never)."""
    e0 = error_norm[0]
    if e0 == 0.0:
        return 0.0
    outside = np.nonzero(error_norm > band * e0)[0]
    if outside.size == 0:
        return 0.0
    last = outside[-1]
    if last + 1 >= len(t):
        return None
    return float(t[last + 1])


def substeps_for(F: np.ndarray, h: float) -> int:
    """RK4 sub-steps per sample so that (h / sub) * rho(F) stays inside the stability region."""
    rho = float(np.max(np.abs(np.linalg.eigvals(F)))) if F.size else 0.0
    need = max(1, int(np.ceil(h * rho / RK4_STABILITY_RADIUS)))
    if need > MAX_SUBSTEPS:
        logger.warning("h * rho = %.3e needs %d sub-steps; capped at %d", h * rho, need, MAX_SUBSTEPS)
        return MAX_SUBSTEPS
    if need > 1:
        logger.info("stiff closed loop (h * rho = %.3e): %d RK4 sub-steps per sample", h * rho, need)
    return need


def _check_finite(z: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(z)):
        logger.error("network state diverged at t=%.4f", t)
        raise DivergenceError(f"non-finite network state at t={t:.4f}", time=t)


# ============================================
# homogeneous
# ============================================

def run_homogeneous(
    sys: LtiSystem,
    top: Topology,
    gains,
    x_init,
    x0_init,
    duration: Optional[float] = None,
    h: Optional[float] = None,
) -> NetworkRun:
    """Leader dx0 = A x0 plus N agents with u = -K delta, delta = (L_g kron I) [x0; x]."""
    settings = get_settings()
    duration = settings.homogeneous_duration if duration is None else duration
    h = settings.step if h is None else h
    N, n, m = top.N, sys.n, sys.m
    K = global_gain(gains)
    if K.shape != (m * N, n * N):
        raise DimensionError(f"global gain must be {(m * N, n * N)}, got {K.shape}")
    X = np.asarray(x_init, dtype=float).reshape(-1)
    x0 = np.asarray(x0_init, dtype=float).reshape(-1)
    if X.shape != (n * N,) or x0.shape != (n,):
        raise DimensionError(f"initial states must be {N} x {n} and ({n},)")

    _, L_g, _ = pinning_matrices(top)
    E = np.kron(L_g, np.eye(n))                 # delta = E z
    A_all = np.kron(np.eye(N + 1), sys.A)
    B_all = np.kron(np.eye(N), sys.B)
    # z' = A_all z + [0; B_all u],  u = -K E z
    F = A_all.copy()
    F[n:, :] -= B_all @ K @ E

    steps = steps_for(duration, h)
    t = np.arange(steps + 1) * h
    Z = np.empty((steps + 1, n * (N + 1)))
    z = np.concatenate([x0, X])
    Z[0] = z
    f = lambda _t, v: F @ v
    sub = substeps_for(F, h)
    for k in range(steps):
        for s in range(sub):
            z = rk4_step(f, t[k] + s * h / sub, z, h / sub)
        _check_finite(z, float(t[k + 1]))
        Z[k + 1] = z

    delta = Z @ E.T                             # K+1 x nN
    error_norm = np.linalg.norm(delta, axis=1)

    Ac = closed_loop_matrix(sys, top, K)
    fd = (delta[2:] - delta[:-2]) / (2.0 * h)
    model = delta[1:-1] @ Ac.T
    scale = 1.0 + float(np.max(np.linalg.norm(model, axis=1))) if len(model) else 1.0
    deriv_res = float(np.max(np.linalg.norm(fd - model, axis=1)) / scale) if len(model) else 0.0
    deriv_ok = deriv_res <= DERIVATIVE_CHECK_TOL
    if not deriv_ok:
        logger.warning("error dynamics check: finite-difference residual %.3e", deriv_res)

    e0, ef = float(error_norm[0]), float(error_norm[-1])
    metrics = RunMetrics(
        initial_error=e0,
        final_error=ef,
        settling_time=settling_time(t, error_norm),
        synchronized=bool(ef <= HOMOGENEOUS_DECAY_RATIO * e0) if e0 > 0 else True,
        derivative_residual=deriv_res,
        derivative_consistent=deriv_ok,
    )
    logger.info(
        "homogeneous run: |delta(0)|=%.3e |delta(%g)|=%.3e settling=%s",
        e0, duration, ef, metrics.settling_time,
    )
    return NetworkRun(
        kind="homogeneous",
        t=t,
        leader=Z[:, :n],
        agents=[Z[:, n * (i + 1): n * (i + 2)] for i in range(N)],
        errors=delta.reshape(steps + 1, N, n),
        error_norm=error_norm,
        metrics=metrics,
    )


# ============================================
# heterogeneous
# ============================================

def run_heterogeneous(
    systems: Sequence[LtiSystem],
    leader: LtiSystem,
    top: Topology,
    controllers: Sequence[DynamicController],
    x_init: Sequence,
    x0_init,
    duration: Optional[float] = None,
    check_time: Optional[float] = None,
) -> NetworkRun:
    """Co-integrate leader, agents and zeta with step H = 2h so every RK4 stage reads a data column."""
    settings = get_settings()
    duration = settings.heterogeneous_duration if duration is None else duration
    N = top.N
    if not (len(systems) == len(controllers) == len(x_init) == N):
        raise DimensionError(f"need {N} systems, controllers and initial states")
    data = controllers[0].leader
    T = data.T
    H = 2.0 * data.h
    per_period = steps_for(T, H, what="T (closed-loop step 2h)")
    steps = steps_for(duration, H)
    n0 = leader.n

    # stages must land on data columns, so the step cannot be refined here
    rho = max(float(np.max(np.abs(np.linalg.eigvals(s.A - s.B @ c.K)))) for s, c in zip(systems, controllers))
    rho = max(rho, 2.0 * float(np.max(np.sum(top.a, axis=1) + top.g)))
    if H * rho > RK4_STABILITY_RADIUS:
        raise DivergenceError(
            f"closed-loop step 2h={H:g} times spectral radius {rho:.3e} leaves the RK4 stability region; "
            "reduce h or the gains",
            time=0.0,
        )

    sizes = [s.n for s in systems]
    x_off = np.concatenate([[n0], n0 + np.cumsum(sizes)]).astype(int)
    z_off = x_off[-1] + n0 * np.arange(N + 1)
    ctrls: List[DynamicController] = list(controllers)

    def unpack(z):
        x0 = z[:n0]
        xs = [z[x_off[i]:x_off[i + 1]] for i in range(N)]
        zs = [z[z_off[i]:z_off[i + 1]] for i in range(N)]
        return x0, xs, zs

    def f(t, z):
        x0, xs, zs = unpack(z)
        nbr = {j: zs[j] for j in range(N)}
        dz = [leader.A @ x0]
        dzeta = []
        for i, (sys, ctrl) in enumerate(zip(systems, ctrls)):
            u = control_input(ctrl, xs[i], zs[i])
            dz.append(sys.A @ xs[i] + sys.B @ u)
            dzeta.append(zeta_derivative(ctrl, t, zs[i], nbr, x0))
        return np.concatenate(dz + dzeta)

    z = np.concatenate(
        [np.asarray(x0_init, dtype=float).reshape(-1)]
        + [np.asarray(x, dtype=float).reshape(-1) for x in x_init]
        + [c.zeta for c in ctrls]
    )
    if z.shape != (z_off[-1],):
        raise DimensionError("initial state sizes do not match the systems")

    t = np.arange(steps + 1) * H
    Z = np.empty((steps + 1, z.size))
    Z[0] = z
    jumps = [0.0]
    for k in range(steps):
        if k > 0 and k % per_period == 0:
            _, _, zs = unpack(z)
            ctrls = [on_period_boundary(c, zs[i]) for i, c in enumerate(ctrls)]
            jumps.append(max(c.reconstruction_residual for c in ctrls))
        z = rk4_step(f, t[k], z, H)
        _check_finite(z, float(t[k + 1]))
        Z[k + 1] = z

    leader_traj = Z[:, :n0]
    agents = [Z[:, x_off[i]:x_off[i + 1]] for i in range(N)]
    zetas = [Z[:, z_off[i]:z_off[i + 1]] for i in range(N)]
    y0 = leader_traj @ leader.C.T
    outputs = [agents[i] @ systems[i].C.T for i in range(N)]
    errors = np.stack([y - y0 for y in outputs], axis=1)        # K+1 x N x p
    error_norm = np.max(np.linalg.norm(errors, axis=2), axis=1)

    check_time = min(HETEROGENEOUS_CHECK_TIME, duration) if check_time is None else check_time
    after = error_norm[t >= check_time - 1e-9]
    max_after = float(np.max(after)) if after.size else float(error_norm[-1])
    metrics = RunMetrics(
        initial_error=float(error_norm[0]),
        final_error=float(error_norm[-1]),
        settling_time=settling_time(t, error_norm),
        max_error_after_check=max_after,
        check_time=check_time,
        synchronized=bool(max_after <= HETEROGENEOUS_SYNC_THRESHOLD),
        boundary_count=len(jumps) - 1,
        max_boundary_jump=float(max(jumps)),
    )
    logger.info(
        "heterogeneous run: max_i|y_i-y0| after t=%g is %.3e (%d boundaries)",
        check_time, max_after, metrics.boundary_count,
    )
    return NetworkRun(
        kind="heterogeneous",
        t=t,
        leader=leader_traj,
        agents=agents,
        errors=errors,
        error_norm=error_norm,
        leader_output=y0,
        outputs=outputs,
        zetas=zetas,
        metrics=metrics,
    )

