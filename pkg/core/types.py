"""
Core type definitions
데이터 수집 / 표현 / 설계 / 시뮬레이션 전 단계가 공유하는 타입 정의
"""

from __future__ import annotations

from typing import Annotated, Dict, List, Literal, Optional

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    field_validator,
    model_validator,
)
from scipy.linalg import block_diag

from core.constants import (
    EXIT_DATA,
    EXIT_DESIGN,
    EXIT_SIMULATION,
    GRID_TOL,
    RANK_RTOL,
)


# ============================================
# 공통 예외
# ============================================

class DataSyncError(Exception):
    """Root of every pipeline failure; exit_code feeds the cli taxonomy."""

    exit_code: int = EXIT_DATA


class DimensionError(DataSyncError, ValueError):
    exit_code = EXIT_DATA


class AlignmentError(DataSyncError, ValueError):
    exit_code = EXIT_DATA


class PcpeError(DataSyncError, ValueError):
    exit_code = EXIT_DATA


class ScenarioError(DataSyncError, ValueError):
    exit_code = EXIT_DATA


class RepresentationError(DataSyncError):
    """Data cannot reproduce the requested initial condition."""

    exit_code = EXIT_DATA

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


class DivergenceError(DataSyncError):
    exit_code = EXIT_SIMULATION

    def __init__(self, message: str, time: float) -> None:
        super().__init__(message)
        self.time = time


class PeriodWindowError(DataSyncError):
    exit_code = EXIT_SIMULATION


class AssumptionError(DataSyncError):
    """Communication graph violates the leader spanning-tree assumption."""

    exit_code = EXIT_DESIGN


class DesignInfeasibleError(DataSyncError):
    exit_code = EXIT_DESIGN

    def __init__(self, message: str, margin: float) -> None:
        super().__init__(message)
        self.margin = margin


class LmiNumericalError(DataSyncError):
    """Backend failed to converge; distinct from a certified infeasibility."""

    exit_code = EXIT_DESIGN


class ConditioningError(DataSyncError):
    exit_code = EXIT_DESIGN

    def __init__(self, message: str, condition: float) -> None:
        super().__init__(message)
        self.condition = condition


class RegulatorError(DataSyncError):
    exit_code = EXIT_DESIGN

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


class AreError(DataSyncError):
    exit_code = EXIT_DESIGN


# ============================================
# numpy 배열 필드
# ============================================

def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _as_vector(v) -> np.ndarray:
    arr = np.array(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"expected a vector, got shape {arr.shape}")
    return _frozen(arr)


def _as_matrix(v) -> np.ndarray:
    arr = np.array(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {arr.shape}")
    return _frozen(arr)


def _as_family(v) -> np.ndarray:
    arr = np.array(v, dtype=float)
    if arr.ndim != 3:
        raise ValueError(f"expected a sampled matrix family (S, rows, M), got shape {arr.shape}")
    return _frozen(arr)


def _to_list(arr: np.ndarray) -> list:
    return np.asarray(arr).tolist()


Vector = Annotated[np.ndarray, BeforeValidator(_as_vector), PlainSerializer(_to_list, when_used="json")]
Matrix = Annotated[np.ndarray, BeforeValidator(_as_matrix), PlainSerializer(_to_list, when_used="json")]
Family = Annotated[np.ndarray, BeforeValidator(_as_family), PlainSerializer(_to_list, when_used="json")]


class ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def numeric_rank(matrix: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Rank from singular values with a relative threshold."""
    if matrix.size == 0:
        return 0
    s = np.linalg.svd(matrix, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


# ============================================
# LTI system / PCPE input / trajectory
# ============================================

class LtiSystem(ArrayModel):
    """Continuous-time model dx/dt = A x + B u, y = C x (no feedthrough)."""

    A: Matrix
    B: Optional[Matrix] = None
    C: Optional[Matrix] = None

    @model_validator(mode="before")
    @classmethod
    def fill_defaults(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        A = np.array(data.get("A"), dtype=float)
        if A.ndim == 0:
            A = A.reshape(1, 1)
        n = A.shape[0]
        B = data.get("B")
        if B is None or np.size(B) == 0:
            data["B"] = np.zeros((n, 0))
        else:
            B = np.array(B, dtype=float)
            data["B"] = B.reshape(n, -1) if B.ndim < 2 else B
        if data.get("C") is None:
            data["C"] = np.eye(n)
        return data

    @model_validator(mode="after")
    def check_dimensions(self) -> "LtiSystem":
        n = self.A.shape[0]
        if n < 1 or self.A.shape != (n, n):
            raise ValueError(f"A must be square with n >= 1, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {self.B.shape}")
        if self.C.shape[1] != n or self.C.shape[0] < 1:
            raise ValueError(f"C must be p x {n} with p >= 1, got {self.C.shape}")
        for name, mat in (("A", self.A), ("B", self.B), ("C", self.C)):
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} contains non-finite entries")
        return self

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


def block_hankel(values: np.ndarray, depth: int) -> np.ndarray:
    """Depth-L block-Hankel matrix of the hold values (rows mL, cols M-L+1)."""
    M, m = values.shape
    cols = M - depth + 1
    if cols < 1:
        return np.zeros((m * depth, 0))
    return np.vstack([values[i:i + cols].T for i in range(depth)])


def is_pcpe(values, order: int) -> bool:
    """True iff the depth-`order` block-Hankel matrix of the hold values has rank m*order."""
    values = np.array(values, dtype=float)
    if values.ndim == 1:
        # a flat sequence of scalar holds
        values = values.reshape(-1, 1)
    m = values.shape[1]
    hankel = block_hankel(values, order)
    if hankel.shape[1] < m * order:
        return False
    return numeric_rank(hankel) == m * order


class PcpeInput(ArrayModel):
    """Piecewise constant persistently exciting input u(t + jT) = mu_j."""

    T: float = Field(..., gt=0)
    values: np.ndarray  # M x m, row j is mu_j
    order: int = Field(..., ge=1)

    @field_validator("values", mode="before")
    @classmethod
    def fix_values(cls, v):
        arr = np.array(v, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or not np.all(np.isfinite(arr)):
            raise ValueError("hold values must be a finite M x m array")
        return _frozen(arr)

    @model_validator(mode="after")
    def check_excitation(self) -> "PcpeInput":
        if not is_pcpe(self.values, self.order):
            raise ValueError(
                f"hold values are not persistently exciting of order {self.order} "
                f"(block-Hankel rank below {self.m * self.order})"
            )
        return self

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def duration(self) -> float:
        return self.M * self.T

    def value_at(self, t: float) -> np.ndarray:
        j = int(np.floor(t / self.T + GRID_TOL))
        j = min(max(j, 0), self.M - 1)
        return self.values[j]


class Trajectory(ArrayModel):
    """Samples of u, x, dx/dt and y at t_k = k h."""

    h: float = Field(..., gt=0)
    t: Vector
    u: Matrix
    x: Matrix
    dx: Matrix
    y: Matrix

    @model_validator(mode="after")
    def check_counts(self) -> "Trajectory":
        k = self.t.shape[0]
        for name in ("u", "x", "dx", "y"):
            if getattr(self, name).shape[0] != k:
                raise ValueError(f"channel {name} has {getattr(self, name).shape[0]} samples, expected {k}")
        if self.x.shape != self.dx.shape:
            raise ValueError("x and dx must have the same shape")
        return self

    @property
    def samples(self) -> int:
        return self.t.shape[0]

    def channel(self, name: str) -> np.ndarray:
        if name not in ("u", "x", "dx", "y"):
            raise ValueError(f"unknown channel {name!r}")
        return getattr(self, name)


class DataMatrixSet(ArrayModel):
    """Row-data matrices H_T(.) sampled on the window t = s h, s = 0..S-1."""

    T: float
    h: float
    M: int
    Hu: Matrix       # m x M
    Hx: Family       # S x n x M
    Hdx: Family      # S x n x M
    Hy: Family       # S x p x M

    @model_validator(mode="after")
    def check_shapes(self) -> "DataMatrixSet":
        S = self.Hx.shape[0]
        for name in ("Hdx", "Hy"):
            if getattr(self, name).shape[0] != S:
                raise ValueError(f"{name} time grid differs from Hx")
        for name in ("Hu", "Hx", "Hdx", "Hy"):
            if getattr(self, name).shape[-1] != self.M:
                raise ValueError(f"{name} must have {self.M} columns")
        return self

    @property
    def window(self) -> int:
        """Number of sampled t in the data window."""
        return self.Hx.shape[0]

    @property
    def steps_per_period(self) -> int:
        return int(round(self.T / self.h))

    def index_of(self, tau: float) -> int:
        s = int(round(tau / self.h))
        if abs(s * self.h - tau) > GRID_TOL * max(1.0, abs(tau)) + 1e-12:
            raise AlignmentError(f"t={tau!r} is not on the data grid (h={self.h})")
        if s < 0 or s >= self.window:
            raise AlignmentError(f"t={tau!r} outside the data window [0, {(self.window - 1) * self.h}]")
        return s


class ExperimentData(ArrayModel):
    """One PCPE experiment: the input, the recorded trajectory and its data matrices."""

    pcpe: Optional[PcpeInput] = None
    trajectory: Trajectory
    matrices: DataMatrixSet
    seed: Optional[int] = None


# ============================================
# Topology
# ============================================

class Topology(ArrayModel):
    """Directed weighted graph a_ij (edge j -> i) with leader pinning gains g_i."""

    a: Matrix
    g: Vector

    @model_validator(mode="after")
    def check_graph(self) -> "Topology":
        N = self.a.shape[0]
        if self.a.shape != (N, N):
            raise ValueError(f"adjacency must be square, got {self.a.shape}")
        if self.g.shape != (N,):
            raise ValueError(f"pinning vector must have {N} entries, got {self.g.shape}")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.g))):
            raise ValueError("graph weights must be finite")
        if np.any(self.a < 0) or np.any(self.g < 0):
            raise ValueError("graph weights must be nonnegative")
        if np.any(np.diag(self.a) != 0):
            raise ValueError("self-loops are not allowed (a_ii must be 0)")
        return self

    @property
    def N(self) -> int:
        return self.a.shape[0]


class ReachabilityReport(BaseModel):
    has_spanning_tree: bool
    nonsingular: bool
    sigma_min: float
    unreached: List[int] = Field(default_factory=list)

    def __bool__(self) -> bool:
        return self.has_spanning_tree


# ============================================
# Data-based representations
# ============================================

class AgentData(ArrayModel):
    """Data side of the alpha-representation of one agent."""

    matrices: DataMatrixSet
    n: int = Field(..., ge=1)
    m: int = Field(..., ge=0)
    p: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_dims(self) -> "AgentData":
        mats = self.matrices
        if mats.Hu.shape[0] != self.m or mats.Hx.shape[1] != self.n or mats.Hy.shape[1] != self.p:
            raise ValueError("data matrices do not match the declared (n, m, p)")
        return self

    @classmethod
    def from_matrices(cls, matrices: DataMatrixSet) -> "AgentData":
        return cls(
            matrices=matrices,
            n=matrices.Hx.shape[1],
            m=matrices.Hu.shape[0],
            p=matrices.Hy.shape[1],
        )

    @property
    def M(self) -> int:
        return self.matrices.M

    @property
    def T(self) -> float:
        return self.matrices.T

    @property
    def Hu(self) -> np.ndarray:
        return self.matrices.Hu

    @property
    def Hx0(self) -> np.ndarray:
        return self.matrices.Hx[0]

    @property
    def Hdx0(self) -> np.ndarray:
        return self.matrices.Hdx[0]

    @property
    def Hy0(self) -> np.ndarray:
        return self.matrices.Hy[0]


class ErrorDataMatrices(ArrayModel):
    Dx: Matrix    # nN x M(N+1)
    Ddx: Matrix   # nN x M(N+1)
    Du: Matrix    # mN x M(N+1)
    U0: Matrix    # m x M(N+1)


class UnforcedPath(ArrayModel):
    t: Vector
    x: Matrix
    dx: Matrix
    alpha: Vector


# ============================================
# LMI designs
# ============================================

class FeasibilityResult(ArrayModel):
    feasible: bool
    margin: float
    status: str
    values: Dict[str, np.ndarray] = Field(default_factory=dict)
    equality_residual: float = 0.0


class StabilizerDesign(ArrayModel):
    K: Matrix
    P: Matrix
    Lam: Matrix
    margin: float
    decay_rate: float = 0.0


class GlobalSyncDesign(ArrayModel):
    K: Matrix
    P: Matrix
    Lam: Matrix
    margin: float
    decay_rate: float = 0.0


class SyncCertificate(ArrayModel):
    """Feasible (Lambda, {P_i}, {F_i}) with the distributed gains K_i = -F_i P_i^{-1}."""

    Lam: Matrix
    P_blocks: List[Matrix]
    F_blocks: List[Matrix]
    gains: List[Matrix]
    margin: float
    decay_rate: float = 0.0
    equality_residual: float
    p_min_eig: float
    lyapunov_max_eig: float

    @property
    def P(self) -> np.ndarray:
        return block_diag(*self.P_blocks)

    @property
    def K(self) -> np.ndarray:
        return block_diag(*self.gains)


# ============================================
# Model-based oracle
# ============================================

class AreSolution(ArrayModel):
    P: Matrix
    K: Matrix
    Q: Matrix
    R: Matrix
    residual: float


class DiagonalScaling(ArrayModel):
    S: Matrix
    Qbar: Matrix
    min_eig: float


class ModelSyncGain(ArrayModel):
    c: float
    K: Matrix
    P: Matrix
    lyapunov_max_eig: float
    are: AreSolution


# ============================================
# Heterogeneous synchronization
# ============================================

class LeaderData(ArrayModel):
    """Autonomous leader data families H_T(x0(t)), H_T(dx0(t)), H_T(y0(t))."""

    T: float
    h: float
    M: int
    Hx0: Family
    Hdx0: Family
    Hy0: Family

    @property
    def n0(self) -> int:
        return self.Hx0.shape[1]

    @property
    def window(self) -> int:
        return self.Hx0.shape[0]

    @classmethod
    def from_matrices(cls, matrices: DataMatrixSet) -> "LeaderData":
        return cls(
            T=matrices.T, h=matrices.h, M=matrices.M,
            Hx0=matrices.Hx, Hdx0=matrices.Hdx, Hy0=matrices.Hy,
        )

    def index_of(self, tau: float) -> int:
        s = int(round(tau / self.h))
        if abs(s * self.h - tau) > GRID_TOL * max(1.0, abs(tau)) + 1e-12:
            raise PeriodWindowError(f"local time {tau!r} is not on the leader data grid (h={self.h})")
        if s < 0 or s >= self.window:
            raise PeriodWindowError(
                f"local time {tau!r} outside the period window [0, {(self.window - 1) * self.h}]"
            )
        return s


class RegulatorSolution(ArrayModel):
    S: Matrix       # M_i x n0
    Pi: Matrix      # n_i x n0
    Gamma: Matrix   # m_i x n0
    residual_dynamics: float
    residual_output: float


class DynamicController(BaseModel):
    """Per-agent dynamic controller state (zeta at the last boundary, alpha-bar, period index)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    agent: int
    K: Matrix
    Pi: Matrix
    Gamma: Matrix
    zeta: Vector
    alpha_bar: Vector
    k: int = 0
    neighbors: Dict[int, float] = Field(default_factory=dict)
    pin_gain: float = 0.0
    leader: LeaderData
    reconstruction_residual: float = 0.0

    @property
    def period_start(self) -> float:
        return self.k * self.leader.T


# ============================================
# Closed-loop runs
# ============================================

class RunMetrics(BaseModel):
    initial_error: float
    final_error: float
    settling_time: Optional[float] = None
    max_error_after_check: Optional[float] = None
    check_time: Optional[float] = None
    synchronized: bool
    derivative_residual: Optional[float] = None
    derivative_consistent: Optional[bool] = None
    boundary_count: int = 0
    max_boundary_jump: float = 0.0


class NetworkRun(ArrayModel):
    kind: Literal["homogeneous", "heterogeneous"]
    t: Vector
    leader: Matrix                 # K x n0
    agents: List[Matrix]           # each K x n_i
    errors: Family                 # K x N x (n or p)
    error_norm: Vector             # K
    leader_output: Optional[Matrix] = None
    outputs: Optional[List[Matrix]] = None
    zetas: Optional[List[Matrix]] = None
    metrics: RunMetrics
