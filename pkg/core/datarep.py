"""
Data-based representations

- PE rank 조건 검사 ([Hu; Hx(t)])
- 초기조건의 alpha 표현, 무입력 궤적의 data-based simulation
- 동기화 오차 동역학의 Kronecker 구조 data matrix
"""

from __future__ import annotations

import numpy as np

from core.constants import RANK_CHECK_POINTS, REPRESENTATION_TOL
from core.logging.logger import get_logger
from core.topology import pinning_matrices
from core.types import AgentData, DimensionError, ErrorDataMatrices, Topology, UnforcedPath, numeric_rank
from core.utils.linalg import min_norm_solve

logger = get_logger(__name__)


def sample_indices(q: int, count: int = RANK_CHECK_POINTS) -> np.ndarray:
    """t = 0 plus equispaced grid indices in [0, T) (q steps per period)."""
    return np.unique(np.linspace(0, q - 1, count).round().astype(int))


def pe_rank_check(data: AgentData) -> bool:
    """rank([Hu; Hx(t)]) == m + n at the sampled t."""
    target = data.m + data.n
    if data.M < target:
        logger.info("PE check: M=%d < m+n=%d", data.M, target)
        return False
    q = data.matrices.steps_per_period
    for s in sample_indices(q):
        r = numeric_rank(np.vstack([data.Hu, data.matrices.Hx[s]]))
        if r != target:
            logger.info("PE check failed at t=%.4g: rank %d != %d", s * data.matrices.h, r, target)
            return False
    return True


def represent_initial(data: AgentData, u0, x0) -> np.ndarray:
    """Minimum-norm alpha0 with [Hu; Hx(0)] alpha0 = [u0; x0]."""
    u0 = np.asarray(u0, dtype=float).reshape(-1)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if u0.shape != (data.m,) or x0.shape != (data.n,):
        raise DimensionError(f"expected u0 ({data.m},) and x0 ({data.n},), got {u0.shape} and {x0.shape}")
    H = np.vstack([data.Hu, data.Hx0])
    return min_norm_solve(H, np.concatenate([u0, x0]), REPRESENTATION_TOL, what="initial-condition representation")


def unforced_trajectory(data: AgentData, x0) -> UnforcedPath:
    """x(t) = Hx(t) alpha, dx(t) = Hdx(t) alpha with Hu alpha = 0, for sampled t in [0, T)."""
    alpha = represent_initial(data, np.zeros(data.m), x0)
    q = data.matrices.steps_per_period
    Hx = data.matrices.Hx[:q]
    Hdx = data.matrices.Hdx[:q]
    return UnforcedPath(
        t=np.arange(q) * data.matrices.h,
        x=Hx @ alpha,
        dx=Hdx @ alpha,
        alpha=alpha,
    )


def build_error_data(data: AgentData, top: Topology) -> ErrorDataMatrices:
    N = top.N
    _, L_g, I_g = pinning_matrices(top)
    Hu = data.Hu
    return ErrorDataMatrices(
        Dx=np.kron(L_g, data.Hx0),
        Ddx=np.kron(L_g, data.Hdx0),
        Du=np.kron(I_g, Hu),
        U0=np.hstack([Hu, np.zeros((data.m, data.M * N))]),
    )


def stacked_matrix(data: AgentData, top: Topology) -> np.ndarray:
    _, L_g, _ = pinning_matrices(top)
    return np.vstack([np.kron(np.eye(top.N + 1), data.Hu), np.kron(L_g, data.Hx0)])


def stacked_rank_check(data: AgentData, top: Topology) -> bool:
    """Full row rank m(N+1) + nN of [I_{N+1} (x) Hu; L_g (x) Hx(0)]."""
    target = data.m * (top.N + 1) + data.n * top.N
    r = numeric_rank(stacked_matrix(data, top))
    logger.debug("stacked rank %d / %d", r, target)
    return r == target
