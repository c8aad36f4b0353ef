"""
LTI 시스템 시뮬레이션 / PCPE 입력 생성 / row-data matrix 구성
"""

from __future__ import annotations

from typing import Callable, Optional, Union

import numpy as np

from core.config.settings import get_settings
from core.constants import GRID_TOL, PCPE_MAX_REDRAWS, PERIOD_TOL
from core.logging.logger import get_logger
from core.types import (
    AlignmentError,
    DataMatrixSet,
    DimensionError,
    DivergenceError,
    ExperimentData,
    LtiSystem,
    PcpeError,
    PcpeInput,
    Trajectory,
    block_hankel,
    is_pcpe,
    numeric_rank,
)

logger = get_logger(__name__)

InputSignal = Union[PcpeInput, Callable[[float], np.ndarray], None]


# ====================================================
# 1. 적분기
# ====================================================
def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, z: np.ndarray, h: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step."""
    k1 = f(t, z)
    k2 = f(t + 0.5 * h, z + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, z + 0.5 * h * k2)
    k4 = f(t + h, z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def steps_for(duration: float, h: float, what: str = "duration") -> int:
    """Number of steps of size h covering `duration`; rejects misaligned values."""
    if h <= 0:
        raise AlignmentError(f"step h must be positive, got {h}")
    k = int(round(duration / h))
    if k < 1 or abs(k * h - duration) > GRID_TOL * max(1.0, duration):
        raise AlignmentError(f"{what}={duration!r} is not a positive multiple of h={h!r}")
    return k


def _input_fn(sys: LtiSystem, signal: InputSignal, h: float) -> Callable[[float], np.ndarray]:
    m = sys.m
    if signal is None:
        zero = np.zeros(m)
        return lambda t: zero
    if isinstance(signal, PcpeInput):
        if signal.m != m:
            raise DimensionError(f"input has {signal.m} channels, system expects m={m}")
        return signal.value_at

    def fn(t: float) -> np.ndarray:
        u = np.atleast_1d(np.asarray(signal(t), dtype=float))
        if u.shape != (m,):
            raise DimensionError(f"input returned shape {u.shape}, system expects ({m},)")
        return u

    return fn


def simulate(
    sys: LtiSystem,
    x0,
    signal: InputSignal = None,
    duration: float = 1.0,
    h: Optional[float] = None,
) -> Trajectory:
    """Fixed-step RK4 integration of dx/dt = A x + B u on [0, duration].

    Samples are recorded at every node t_k = k h, k = 0..K (terminal node
    included). dx is evaluated from the model at each node, y = C x.
    """
    h = get_settings().step if h is None else h
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (sys.n,):
        raise DimensionError(f"x0 has shape {x0.shape}, system expects ({sys.n},)")
    K = steps_for(duration, h)
    u_of = _input_fn(sys, signal, h)
    A, B, C = sys.A, sys.B, sys.C
    hold = isinstance(signal, PcpeInput)

    t = np.arange(K + 1) * h
    xs = np.empty((K + 1, sys.n))
    us = np.empty((K + 1, sys.m))
    xs[0] = x0
    x = x0
    for k in range(K):
        tk = t[k]
        if hold:
            # holds are aligned to the grid: one value per step
            u_mid = u_of(tk + 0.5 * h)
            f = lambda _t, z, _u=u_mid: A @ z + B @ _u
        else:
            f = lambda _t, z: A @ z + B @ u_of(_t)
        x = rk4_step(f, tk, x, h)
        if not np.all(np.isfinite(x)):
            logger.error("integration diverged at t=%.6f", tk + h)
            raise DivergenceError(f"non-finite state at t={tk + h:.6f}", time=float(tk + h))
        xs[k + 1] = x
    for k in range(K + 1):
        us[k] = u_of(t[k])
    dxs = xs @ A.T + us @ B.T
    ys = xs @ C.T
    return Trajectory(h=h, t=t, u=us, x=xs, dx=dxs, y=ys)


# ====================================================
# 2. PCPE 입력
# ====================================================
def min_holds(m: int, order: int) -> int:
    """Column-count necessity for a depth-`order` block-Hankel of rank m*order."""
    return order * (m + 1) - 1


def generate_pcpe(m: int, L: int, T: float, M: int, seed: int) -> PcpeInput:
    """Seeded PCPE input of order L: holds uniform on [-1, 1]^m, rank verified."""
    if m < 1:
        raise PcpeError(f"PCPE input needs m >= 1 channels, got {m}")
    if T <= 0:
        raise PcpeError(f"hold period must be positive, got {T}")
    bound = min_holds(m, L)
    if M < bound:
        raise PcpeError(f"M={M} below the bound M >= L(m+1)-1 = {bound} for order L={L}, m={m}")
    rng = np.random.default_rng(seed)
    for attempt in range(PCPE_MAX_REDRAWS):
        values = rng.uniform(-1.0, 1.0, size=(M, m))
        if is_pcpe(values, L):
            logger.debug("PCPE draw accepted (seed=%s, attempt=%d)", seed, attempt)
            return PcpeInput(T=T, values=values, order=L)
        logger.warning("PCPE draw rank-deficient (seed=%s, attempt=%d), redrawing", seed, attempt)
    raise PcpeError(f"no rank-{m * L} block-Hankel draw after {PCPE_MAX_REDRAWS} attempts")


def pcpe_rank(values, L: int) -> int:
    values = np.array(values, dtype=float)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    return numeric_rank(block_hankel(values, L))


def check_period_admissible(sys: LtiSystem, T: float) -> bool:
    """False iff T = 2 pi kappa / |Im(l_j - l_k)| for some eigenvalue pair and kappa >= 1."""
    eig = np.linalg.eigvals(sys.A)
    for j in range(len(eig)):
        for k in range(j + 1, len(eig)):
            d = abs((eig[j] - eig[k]).imag)
            if d <= PERIOD_TOL:
                continue
            base = 2.0 * np.pi / d
            kappa = round(T / base)
            if kappa >= 1 and abs(T - kappa * base) <= PERIOD_TOL:
                return False
    return True


# ====================================================
# 3. Row-data matrices H_T(.)
# ====================================================
def hankel_row(traj: Trajectory, channel: str, T: float, M: int) -> np.ndarray:
    """H_T(xi(t)) = [xi(t) xi(t+T) ... xi(t+(M-1)T)] for every sampled t of the window.

    Returns an array (S, rows, M). The window is [0, T] when the trajectory
    reaches MT, otherwise [0, T).
    """
    q = steps_for(T, traj.h, what="T")
    data = traj.channel(channel)
    last = (M - 1) * q
    available = traj.samples - last
    if available < q:
        raise AlignmentError(
            f"trajectory with {traj.samples} samples does not cover [0, MT) for M={M}, T={T}"
        )
    S = min(q + 1, available)
    cols = np.arange(M) * q
    idx = np.arange(S)[:, None] + cols[None, :]   # S x M
    return np.transpose(data[idx], (0, 2, 1))


def build_data_matrices(traj: Trajectory, T: float, M: int) -> DataMatrixSet:
    Hu_family = hankel_row(traj, "u", T, M)
    q = int(round(T / traj.h))
    # H_T(u) is constant on [0, T) for a PCPE input
    Hu = Hu_family[0]
    if not np.array_equal(Hu_family[:q], np.broadcast_to(Hu, Hu_family[:q].shape)):
        logger.warning("input data matrix varies over the hold window; input is not grid-aligned PCPE")
    return DataMatrixSet(
        T=T,
        h=traj.h,
        M=M,
        Hu=Hu,
        Hx=hankel_row(traj, "x", T, M),
        Hdx=hankel_row(traj, "dx", T, M),
        Hy=hankel_row(traj, "y", T, M),
    )


def default_holds(n: int, m: int) -> int:
    return (n + 1) * (m + 1) + 2


def collect_experiment(
    sys: LtiSystem,
    T: Optional[float] = None,
    M: Optional[int] = None,
    seed: int = 0,
    h: Optional[float] = None,
    order: Optional[int] = None,
    x0=None,
) -> ExperimentData:
    """Apply a PCPE input of order n+1 (default) and record the data matrices.

    Collection is model-free from the caller's point of view: the model is
    only the simulated plant.
    """
    settings = get_settings()
    T = settings.hold_period if T is None else T
    h = settings.step if h is None else h
    M = default_holds(sys.n, sys.m) if M is None else M
    order = sys.n + 1 if order is None else order
    steps_for(T, h, what="T")

    pcpe = generate_pcpe(sys.m, order, T, M, seed)
    if x0 is None:
        # separate stream so the input draw does not depend on n
        x0 = np.random.default_rng([seed, 1]).uniform(-1.0, 1.0, size=sys.n)
    traj = simulate(sys, x0, pcpe, duration=M * T, h=h)
    matrices = build_data_matrices(traj, T, M)
    logger.info("collected PCPE data: n=%d m=%d M=%d T=%.4g h=%.1e seed=%s", sys.n, sys.m, M, T, h, seed)
    return ExperimentData(pcpe=pcpe, trajectory=traj, matrices=matrices, seed=seed)
