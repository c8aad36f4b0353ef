"""
LMI feasibility 설계

- FeasibilityProblem: unknown blocks + 대칭 행렬 부등식 + affine 등식
- solve_feasibility: margin t 최대화 (>0 -> >= tI, <0 -> <= -tI), 이후 gain 크기 최소화
- data-driven stabilizer / global / distributed synchronization gain
"""

from __future__ import annotations

from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import cvxpy as cp
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.linalg import block_diag

from core.config.settings import get_settings
from core.constants import HURWITZ_TOL
from core.datarep import build_error_data
from core.logging.logger import get_logger
from core.topology import laplacian
from core.types import (
    AgentData,
    DesignInfeasibleError,
    DimensionError,
    ErrorDataMatrices,
    FeasibilityResult,
    GlobalSyncDesign,
    LmiNumericalError,
    LtiSystem,
    StabilizerDesign,
    SyncCertificate,
    Topology,
)
from core.utils.linalg import checked_inverse, spectral_abscissa, sym

logger = get_logger(__name__)

Unknowns = Dict[str, Any]   # cvxpy variables while solving, numpy arrays when auditing
AffineMap = Callable[[Unknowns], Any]

_INFEASIBLE_STATUSES = (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE)
_OK_STATUSES = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)

_SOLVER_OPTIONS: Dict[str, Dict[str, Any]] = {
    "CLARABEL": {"tol_feas": 1e-10, "tol_gap_abs": 1e-10, "tol_gap_rel": 1e-10, "max_iter": 500},
    "SCS": {"eps_abs": 1e-9, "eps_rel": 1e-9, "max_iters": 200_000},
}


# ====================================================
# 1. 문제 정의
# ====================================================
class UnknownBlock(BaseModel):
    name: str
    shape: Tuple[int, int]
    symmetric: bool = False

    @model_validator(mode="after")
    def check_shape(self) -> "UnknownBlock":
        r, c = self.shape
        if r < 1 or c < 1:
            raise ValueError(f"unknown {self.name!r} has empty shape {self.shape}")
        if self.symmetric and r != c:
            raise ValueError(f"symmetric unknown {self.name!r} must be square, got {self.shape}")
        return self


class MatrixInequality(BaseModel):
    """expr(unknowns) in sense: '>0', '<0' (carry the margin) or '>=I', '<=I', '>=0' (margin-free)."""

    name: str
    expr: AffineMap
    sense: Literal[">0", "<0", ">=I", "<=I", ">=0"]


class EqualityConstraint(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    expr: AffineMap
    rhs: Optional[np.ndarray] = None   # zeros when omitted


class FeasibilityProblem(BaseModel):
    """
    minimize: 1x1 unknown minimised once the margin is known (margin kept >= lmi_margin_keep * t*)
    projector: maps solver values onto the exact equality subspace before the audit
    """

    unknowns: List[UnknownBlock]
    inequalities: List[MatrixInequality] = Field(default_factory=list)
    equalities: List[EqualityConstraint] = Field(default_factory=list)
    minimize: Optional[str] = None
    minimize_bound: Optional[float] = None
    projector: Optional[Callable[..., Dict]] = None

    @model_validator(mode="after")
    def check_names(self) -> "FeasibilityProblem":
        names = [u.name for u in self.unknowns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate unknown names: {names}")
        if self.minimize is not None:
            target = next((u for u in self.unknowns if u.name == self.minimize), None)
            if target is None or target.shape != (1, 1):
                raise ValueError(f"minimize must name a 1x1 unknown, got {self.minimize!r}")
        return self


# ====================================================
# 2. Solver backend
# ====================================================
def _solver_chain(solver: Optional[str]) -> List[str]:
    settings = get_settings()
    installed = set(cp.installed_solvers())
    chain = [s for s in (solver or settings.lmi_solver, settings.lmi_fallback_solver) if s in installed]
    if not chain:
        raise LmiNumericalError(f"no configured SDP solver installed (available: {sorted(installed)})")
    return list(dict.fromkeys(chain))


def _build(prob: FeasibilityProblem):
    settings = get_settings()
    unknowns = {
        u.name: cp.Variable(u.shape, symmetric=u.symmetric, name=u.name) for u in prob.unknowns
    }
    t = cp.Variable(name="margin")
    constraints = [t <= settings.lmi_margin_cap]
    for var in unknowns.values():
        constraints.append(cp.norm(var, "fro") <= settings.lmi_variable_bound)
    if prob.minimize is not None and prob.minimize_bound is not None:
        constraints.append(unknowns[prob.minimize] <= prob.minimize_bound)

    for ineq in prob.inequalities:
        X = ineq.expr(unknowns)
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise DimensionError(f"inequality {ineq.name!r} is not square: shape {X.shape}")
        k = X.shape[0]
        # symmetric slack: Z == X also forces X to be symmetric
        Z = cp.Variable((k, k), symmetric=True, name=f"{ineq.name}_slack")
        constraints.append(Z == X)
        if ineq.sense == ">0":
            constraints.append(Z >> t * np.eye(k))
        elif ineq.sense == "<0":
            constraints.append(Z << -t * np.eye(k))
        elif ineq.sense == ">=I":
            constraints.append(Z >> np.eye(k))
        elif ineq.sense == "<=I":
            constraints.append(Z << np.eye(k))
        else:
            constraints.append(Z >> 0)

    for eq in prob.equalities:
        lhs = eq.expr(unknowns)
        rhs = np.zeros(lhs.shape) if eq.rhs is None else np.asarray(eq.rhs, dtype=float)
        if tuple(rhs.shape) != tuple(lhs.shape):
            raise DimensionError(f"equality {eq.name!r}: lhs {lhs.shape} vs rhs {rhs.shape}")
        constraints.append(lhs == rhs)
    return unknowns, t, constraints


def _run(problem: cp.Problem, chain: List[str]) -> str:
    """Solve with the first solver that reports OPTIMAL or a certified infeasibility."""
    status = None
    last_error: Optional[Exception] = None
    for name in chain:
        try:
            problem.solve(solver=name, verbose=False, **_SOLVER_OPTIONS.get(name, {}))
        except cp.SolverError as e:
            logger.warning("solver %s failed: %s", name, e)
            last_error = e
            continue
        status = problem.status
        if status == cp.OPTIMAL or status in _INFEASIBLE_STATUSES:
            return status
        logger.warning("solver %s returned status %s", name, status)
    if status is None:
        raise LmiNumericalError(f"SDP backend failed: {last_error}")
    return status


def _values(prob: FeasibilityProblem, unknowns: Dict[str, cp.Variable]) -> Dict[str, np.ndarray]:
    values = {}
    for u in prob.unknowns:
        v = np.array(unknowns[u.name].value, dtype=float).reshape(u.shape)
        values[u.name] = sym(v) if u.symmetric else v
    return values


def audit(prob: FeasibilityProblem, values: Dict[str, np.ndarray]) -> Tuple[float, float]:
    """(strict margin, equality residual) re-evaluated in floating point from `values`."""
    margin = float("inf")
    for ineq in prob.inequalities:
        X = np.atleast_2d(np.asarray(ineq.expr(values), dtype=float))
        eig = np.linalg.eigvalsh(sym(X))
        if ineq.sense == ">0":
            margin = min(margin, float(eig[0]))
        elif ineq.sense == "<0":
            margin = min(margin, float(-eig[-1]))
    eq_res = 0.0
    for eq in prob.equalities:
        lhs = np.asarray(eq.expr(values), dtype=float)
        rhs = np.zeros(lhs.shape) if eq.rhs is None else np.asarray(eq.rhs, dtype=float)
        eq_res = max(eq_res, float(np.linalg.norm(lhs - rhs) / (1.0 + np.linalg.norm(rhs))))
    return margin, eq_res


def solve_feasibility(prob: FeasibilityProblem, solver: Optional[str] = None) -> FeasibilityResult:
    """Maximise the common strictness margin t; feasible iff the audited margin >= lmi_min_margin."""
    settings = get_settings()
    chain = _solver_chain(solver)
    unknowns, t, constraints = _build(prob)

    status = _run(cp.Problem(cp.Maximize(t), constraints), chain)
    if status in _INFEASIBLE_STATUSES:
        logger.info("feasibility program infeasible (status=%s)", status)
        return FeasibilityResult(feasible=False, margin=float("-inf"), status=status)
    if status not in _OK_STATUSES:
        raise LmiNumericalError(f"SDP backend did not converge (status={status})")
    t_star = float(t.value)
    values = _values(prob, unknowns)

    if prob.minimize is not None and t_star >= settings.lmi_min_margin:
        keep = settings.lmi_margin_keep * t_star
        target = unknowns[prob.minimize]
        try:
            refined = _run(cp.Problem(cp.Minimize(target[0, 0]), constraints + [t >= keep]), chain)
        except LmiNumericalError as e:
            refined = str(e)
        if refined in _OK_STATUSES:
            values = _values(prob, unknowns)
            status = refined
            logger.debug("%s minimised to %.3e at margin >= %.3e", prob.minimize, float(target.value[0, 0]), keep)
        else:
            logger.warning("minimisation of %s failed (%s); keeping the max-margin point", prob.minimize, refined)

    if prob.projector is not None:
        values = prob.projector(values)
    margin, eq_res = audit(prob, values)
    if not np.isfinite(margin):
        margin = t_star
    if eq_res > settings.lmi_equality_tol:
        raise LmiNumericalError(
            f"equality residual {eq_res:.3e} exceeds {settings.lmi_equality_tol:.1e} (status={status})"
        )

    feasible = margin >= settings.lmi_min_margin
    logger.debug("feasibility: status=%s t*=%.3e audited=%.3e eq_residual=%.2e", status, t_star, margin, eq_res)
    return FeasibilityResult(
        feasible=feasible, margin=margin, status=status, values=values, equality_residual=eq_res
    )


# ====================================================
# 3. 식 helper (cvxpy / numpy 공용)
# ====================================================
def _is_expr(x) -> bool:
    return isinstance(x, cp.Expression)


def _bmat(rows: Sequence[Sequence]) -> Any:
    if any(_is_expr(x) for row in rows for x in row):
        return cp.bmat(rows)
    return np.block([[np.asarray(x, dtype=float) for x in row] for row in rows])


def _blkdiag(blocks: Sequence) -> Any:
    rows = []
    for i, bi in enumerate(blocks):
        rows.append([bi if i == j else np.zeros((bi.shape[0], bj.shape[1])) for j, bj in enumerate(blocks)])
    return _bmat(rows)


def _gain_block(P, F, kappa) -> Any:
    """[[P, F'], [F, kappa I]] >= 0 with P >= I bounds ||F P^{-1}||^2 by kappa."""
    m = F.shape[0]
    return _bmat([[P, F.T], [F, kappa[0, 0] * np.eye(m)]])


def _lyapunov(Ddx: np.ndarray, Dx: np.ndarray, beta: float) -> AffineMap:
    """Ddx L + L' Ddx' + beta (Dx L + L' Dx') (< 0 certifies abscissa < -beta)."""

    def expr(u: Unknowns):
        lam = u["Lam"]
        W = Ddx @ lam
        out = W + W.T
        if beta > 0:
            V = Dx @ lam
            out = out + beta * (V + V.T)
        return out

    return expr


def _project_block(Lam: np.ndarray, cols: slice, C: np.ndarray, S: np.ndarray) -> None:
    """
    In place: orthogonal projection of Lam[:, cols] onto C lam_j = 0 for every column
    and S Lam[:, cols] symmetric (S has one row per projected column).
    """
    sub = Lam[:, cols]
    R, c = sub.shape
    pairs = [(p, q) for p in range(c) for q in range(p + 1, c)]
    symm = np.zeros((len(pairs), R * c))
    for k, (p, q) in enumerate(pairs):
        symm[k, q * R:(q + 1) * R] += S[p]
        symm[k, p * R:(p + 1) * R] -= S[q]
    A = np.vstack([block_diag(*[C] * c), symm])
    v = sub.reshape(-1, order="F")
    corr, *_ = np.linalg.lstsq(A, A @ v, rcond=None)
    Lam[:, cols] = (v - corr).reshape(R, c, order="F")


def _resolve_beta(decay_rate: Optional[float]) -> float:
    return get_settings().decay_rate if decay_rate is None else float(decay_rate)


def _kappa() -> Tuple[UnknownBlock, float]:
    bound = get_settings().lmi_gain_bound
    return UnknownBlock(name="kappa", shape=(1, 1)), bound ** 2


# ====================================================
# 4. Data-driven designs
# ====================================================
def design_single_stabilizer(data: AgentData, decay_rate: Optional[float] = None) -> StabilizerDesign:
    """K = -Hu L (Hx(0) L)^{-1} from Hx(0) L > 0 and Hdx(0) L + (Hdx(0) L)' < 0."""
    if data.m < 1:
        raise DimensionError("stabilizer design needs at least one input channel")
    beta = _resolve_beta(decay_rate)
    Hx0, Hdx0, Hu = data.Hx0, data.Hdx0, data.Hu
    kappa, bound = _kappa()
    prob = FeasibilityProblem(
        unknowns=[UnknownBlock(name="Lam", shape=(data.M, data.n)), kappa],
        inequalities=[
            MatrixInequality(name="P", expr=lambda u: Hx0 @ u["Lam"], sense=">0"),
            MatrixInequality(name="P_norm", expr=lambda u: Hx0 @ u["Lam"], sense=">=I"),
            MatrixInequality(name="lyapunov", expr=_lyapunov(Hdx0, Hx0, beta), sense="<0"),
            MatrixInequality(
                name="gain", expr=lambda u: _gain_block(Hx0 @ u["Lam"], Hu @ u["Lam"], u["kappa"]), sense=">=0"
            ),
        ],
        minimize="kappa",
        minimize_bound=bound,
    )
    result = solve_feasibility(prob)
    if not result.feasible:
        raise DesignInfeasibleError(
            f"stabilizer program infeasible (margin {result.margin:.3e})", margin=result.margin
        )
    Lam = result.values["Lam"]
    P = sym(Hx0 @ Lam)
    K = -Hu @ Lam @ checked_inverse(P, get_settings().max_condition, what="Hx(0) Lam")
    logger.info("stabilizer designed: margin=%.3e decay=%.2f |K|=%.3e", result.margin, beta, np.linalg.norm(K, 2))
    return StabilizerDesign(K=K, P=P, Lam=Lam, margin=result.margin, decay_rate=beta)


def design_global_sync(data: AgentData, top: Topology, decay_rate: Optional[float] = None) -> GlobalSyncDesign:
    """K = -(Du L)(Dx L)^{-1} from Dx L > 0, Lyapunov < 0 and U0 L = 0."""
    beta = _resolve_beta(decay_rate)
    E = build_error_data(data, top)
    N = top.N
    kappa, bound = _kappa()

    def project(values):
        Lam = np.array(values["Lam"], dtype=float, copy=True)
        _project_block(Lam, slice(0, Lam.shape[1]), E.U0, E.Dx)
        return dict(values, Lam=Lam)

    prob = FeasibilityProblem(
        unknowns=[UnknownBlock(name="Lam", shape=(data.M * (N + 1), data.n * N)), kappa],
        inequalities=[
            MatrixInequality(name="P", expr=lambda u: E.Dx @ u["Lam"], sense=">0"),
            MatrixInequality(name="P_norm", expr=lambda u: E.Dx @ u["Lam"], sense=">=I"),
            MatrixInequality(name="lyapunov", expr=_lyapunov(E.Ddx, E.Dx, beta), sense="<0"),
            MatrixInequality(
                name="gain", expr=lambda u: _gain_block(E.Dx @ u["Lam"], E.Du @ u["Lam"], u["kappa"]), sense=">=0"
            ),
        ],
        equalities=[EqualityConstraint(name="leader_input", expr=lambda u: E.U0 @ u["Lam"])],
        minimize="kappa",
        minimize_bound=bound,
        projector=project,
    )
    result = solve_feasibility(prob)
    if not result.feasible:
        raise DesignInfeasibleError(
            f"global synchronization program infeasible (margin {result.margin:.3e})", margin=result.margin
        )
    Lam = result.values["Lam"]
    P = sym(E.Dx @ Lam)
    K = -E.Du @ Lam @ checked_inverse(P, get_settings().max_condition, what="Dx Lam")
    logger.info("global synchronization gain designed: N=%d margin=%.3e", N, result.margin)
    return GlobalSyncDesign(K=K, P=P, Lam=Lam, margin=result.margin, decay_rate=beta)


def _block_projector(E: ErrorDataMatrices, N: int, n: int, m: int) -> Callable[[Dict], Dict]:
    """Exact Dx L = blkdiag{P_i}, Du L = blkdiag{F_i}, U0 L = 0; P_i, F_i re-read from L."""

    def off_block_rows(b: int) -> np.ndarray:
        keep_x = np.ones(n * N, dtype=bool)
        keep_x[b * n:(b + 1) * n] = False
        keep_u = np.ones(m * N, dtype=bool)
        keep_u[b * m:(b + 1) * m] = False
        return np.vstack([E.U0, E.Dx[keep_x], E.Du[keep_u]])

    def project(values: Dict) -> Dict:
        Lam = np.array(values["Lam"], dtype=float, copy=True)
        for b in range(N):
            _project_block(Lam, slice(b * n, (b + 1) * n), off_block_rows(b), E.Dx[b * n:(b + 1) * n])
        X, U = E.Dx @ Lam, E.Du @ Lam
        out = dict(values, Lam=Lam)
        for i in range(N):
            out[f"P{i}"] = sym(X[i * n:(i + 1) * n, i * n:(i + 1) * n])
            out[f"F{i}"] = U[i * m:(i + 1) * m, i * n:(i + 1) * n]
        return out

    return project


def design_distributed_sync(
    data: AgentData, top: Topology, decay_rate: Optional[float] = None
) -> SyncCertificate:
    """Block-diagonal certificate Dx L = blkdiag{P_i}, Du L = blkdiag{F_i}; K_i = -F_i P_i^{-1}."""
    settings = get_settings()
    beta = _resolve_beta(decay_rate)
    E = build_error_data(data, top)
    N, n, m = top.N, data.n, data.m
    kappa, bound = _kappa()

    unknowns = [UnknownBlock(name="Lam", shape=(data.M * (N + 1), n * N)), kappa]
    unknowns += [UnknownBlock(name=f"P{i}", shape=(n, n), symmetric=True) for i in range(N)]
    unknowns += [UnknownBlock(name=f"F{i}", shape=(m, n)) for i in range(N)]

    inequalities = [MatrixInequality(name="lyapunov", expr=_lyapunov(E.Ddx, E.Dx, beta), sense="<0")]
    for i in range(N):
        inequalities += [
            MatrixInequality(name=f"P{i}", expr=lambda u, i=i: u[f"P{i}"], sense=">0"),
            MatrixInequality(name=f"P{i}_norm", expr=lambda u, i=i: u[f"P{i}"], sense=">=I"),
            MatrixInequality(
                name=f"gain{i}", expr=lambda u, i=i: _gain_block(u[f"P{i}"], u[f"F{i}"], u["kappa"]), sense=">=0"
            ),
        ]

    equalities = [
        EqualityConstraint(name="leader_input", expr=lambda u: E.U0 @ u["Lam"]),
        EqualityConstraint(
            name="state_blocks",
            expr=lambda u: E.Dx @ u["Lam"] - _blkdiag([u[f"P{i}"] for i in range(N)]),
        ),
        EqualityConstraint(
            name="input_blocks",
            expr=lambda u: E.Du @ u["Lam"] - _blkdiag([u[f"F{i}"] for i in range(N)]),
        ),
    ]
    result = solve_feasibility(
        FeasibilityProblem(
            unknowns=unknowns,
            inequalities=inequalities,
            equalities=equalities,
            minimize="kappa",
            minimize_bound=bound,
            projector=_block_projector(E, N, n, m),
        )
    )
    if not result.feasible:
        raise DesignInfeasibleError(
            f"distributed synchronization program infeasible (margin {result.margin:.3e}); "
            "check excitation and the leader spanning tree",
            margin=result.margin,
        )

    Lam = result.values["Lam"]
    P_blocks = [result.values[f"P{i}"] for i in range(N)]
    F_blocks = [result.values[f"F{i}"] for i in range(N)]
    gains = [
        -F @ checked_inverse(P, settings.max_condition, what=f"P_{i + 1}")
        for i, (P, F) in enumerate(zip(P_blocks, F_blocks))
    ]
    W = E.Ddx @ Lam
    lyap = float(np.max(np.linalg.eigvalsh(sym(W + W.T))))
    p_min = float(min(np.min(np.linalg.eigvalsh(P)) for P in P_blocks))
    logger.info(
        "distributed gains designed: N=%d margin=%.3e min eig(P_i)=%.3e lyapunov=%.3e max|K_i|=%.3e",
        N, result.margin, p_min, lyap, max(np.linalg.norm(K, 2) for K in gains),
    )
    return SyncCertificate(
        Lam=Lam,
        P_blocks=P_blocks,
        F_blocks=F_blocks,
        gains=gains,
        margin=result.margin,
        decay_rate=beta,
        equality_residual=result.equality_residual,
        p_min_eig=p_min,
        lyapunov_max_eig=lyap,
    )


# ====================================================
# 5. Verification
# ====================================================
def verify_hurwitz(Ac) -> Tuple[bool, float]:
    Ac = np.atleast_2d(np.asarray(Ac, dtype=float))
    if Ac.shape[0] != Ac.shape[1]:
        raise DimensionError(f"expected a square matrix, got {Ac.shape}")
    abscissa = spectral_abscissa(Ac)
    return abscissa < -HURWITZ_TOL, abscissa


def global_gain(gains: Union[np.ndarray, Sequence[np.ndarray]]) -> np.ndarray:
    if isinstance(gains, np.ndarray) and gains.ndim == 2:
        return gains
    return block_diag(*[np.atleast_2d(k) for k in gains])


def closed_loop_matrix(sys: LtiSystem, top: Topology, gains) -> np.ndarray:
    """A_c = I_N (x) A - ((L+G) (x) B) K for u = -K delta."""
    N = top.N
    K = global_gain(gains)
    if K.shape != (sys.m * N, sys.n * N):
        raise DimensionError(f"global gain must be {(sys.m * N, sys.n * N)}, got {K.shape}")
    LG = laplacian(top) + np.diag(top.g)
    return np.kron(np.eye(N), sys.A) - np.kron(LG, sys.B) @ K
