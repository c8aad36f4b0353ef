"""
Model-based baselines (모델을 아는 경우의 기준해)

ARE 기반 동기화 gain, 대각 S 스케일링, block-diagonal Lyapunov 인증.
데이터 파이프라인에서는 사용하지 않고 테스트/감사용으로만 쓴다.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.linalg import block_diag, schur

from core.constants import ARE_RESIDUAL_TOL, C_CAP, LYAPUNOV_TOL
from core.lmi import FeasibilityProblem, MatrixInequality, UnknownBlock, closed_loop_matrix, solve_feasibility
from core.logging.logger import get_logger
from core.topology import laplacian
from core.types import (
    AreError,
    AssumptionError,
    AreSolution,
    DiagonalScaling,
    DimensionError,
    LtiSystem,
    ModelSyncGain,
    Topology,
)
from core.utils.linalg import sym

logger = get_logger(__name__)


def solve_are(A, B, Q=None, R=None) -> AreSolution:
    """Stabilizing solution of Q + P A + A'P - P B R^{-1} B'P = 0 via the Hamiltonian stable subspace."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    n, m = B.shape
    Q = np.eye(n) if Q is None else np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.eye(m) if R is None else np.atleast_2d(np.asarray(R, dtype=float))
    if Q.shape != (n, n) or R.shape != (m, m):
        raise DimensionError(f"Q must be {n}x{n} and R {m}x{m}, got {Q.shape} and {R.shape}")

    R_inv = np.linalg.inv(R)
    H = np.block([[A, -B @ R_inv @ B.T], [-Q, -A.T]])
    # ordered real Schur form: the first n Schur vectors span the stable subspace
    T, U, sdim = schur(H, output="real", sort="lhp")
    if sdim != n:
        raise AreError(f"Hamiltonian has {sdim} stable eigenvalues, expected {n} (is (A, B) stabilizable?)")
    X1, X2 = U[:n, :n], U[n:, :n]
    if np.linalg.cond(X1) > 1e12:
        raise AreError("X1 block of the stable subspace is singular")
    P = sym(np.linalg.solve(X1.T, X2.T).T)

    residual = float(np.linalg.norm(Q + P @ A + A.T @ P - P @ B @ R_inv @ B.T @ P))
    if residual > ARE_RESIDUAL_TOL * (1.0 + np.linalg.norm(P)):
        raise AreError(f"ARE residual {residual:.3e} above tolerance")
    if np.min(np.linalg.eigvalsh(P)) <= 0:
        raise AreError("ARE solution is not positive definite")
    K = R_inv @ B.T @ P
    return AreSolution(P=P, K=K, Q=Q, R=R, residual=residual)


def find_diagonal_S(top: Topology) -> DiagonalScaling:
    """Diagonal S > 0 (S <= I) with Qbar = S(L+G) + (L+G)'S > 0."""
    N = top.N
    LG = laplacian(top) + np.diag(top.g)
    units = [np.outer(np.eye(N)[i], np.eye(N)[i]) for i in range(N)]

    def S_of(u):
        s = u["s"]
        return sum(s[i, 0] * units[i] for i in range(N))

    def Qbar_of(u):
        S = S_of(u)
        return S @ LG + LG.T @ S

    prob = FeasibilityProblem(
        unknowns=[UnknownBlock(name="s", shape=(N, 1))],
        inequalities=[
            MatrixInequality(name="S", expr=S_of, sense=">0"),
            MatrixInequality(name="S_norm", expr=S_of, sense="<=I"),
            MatrixInequality(name="Qbar", expr=Qbar_of, sense=">0"),
        ],
    )
    result = solve_feasibility(prob)
    if not result.feasible:
        raise AssumptionError(
            f"no diagonal scaling S found (margin {result.margin:.3e}); leader spanning tree missing?"
        )
    S = np.diag(result.values["s"][:, 0])
    Qbar = sym(S @ LG + LG.T @ S)
    min_eig = float(np.min(np.linalg.eigvalsh(Qbar)))
    logger.debug("diagonal scaling: s=%s min eig(Qbar)=%.3e", np.diag(S), min_eig)
    return DiagonalScaling(S=S, Qbar=Qbar, min_eig=min_eig)


def model_sync_gain(sys: LtiSystem, top: Topology, Q=None, R=None, c_cap: Optional[int] = None) -> ModelSyncGain:
    """Smallest c in 1, 2, 4, ... with blkdiag{s_i P} certifying P A_c + A_c' P < 0 for K = c K_bar."""
    cap = C_CAP if c_cap is None else c_cap
    are = solve_are(sys.A, sys.B, Q, R)
    scaling = find_diagonal_S(top)
    P = block_diag(*[s * are.P for s in np.diag(scaling.S)])

    c = 1
    while c <= cap:
        K = c * are.K
        Ac = closed_loop_matrix(sys, top, [K] * top.N)
        lyap = float(np.max(np.linalg.eigvalsh(sym(P @ Ac + Ac.T @ P))))
        logger.debug("c=%d: max eig(P Ac + Ac'P)=%.3e", c, lyap)
        if lyap <= -LYAPUNOV_TOL:
            logger.info("model-based gain accepted at c=%d", c)
            return ModelSyncGain(c=float(c), K=K, P=P, lyapunov_max_eig=lyap, are=are)
        c *= 2
    raise AreError(f"no coupling scalar c <= {cap} certified the block-diagonal Lyapunov inequality")
