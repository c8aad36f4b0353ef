import numpy as np

from core.types import ConditioningError, RepresentationError


def relative_residual(A: np.ndarray, x: np.ndarray, b: np.ndarray) -> float:
    """||A x - b|| / (1 + ||b||)."""
    r = A @ x - b
    return float(np.linalg.norm(r) / (1.0 + np.linalg.norm(b)))


def min_norm_solve(A: np.ndarray, b: np.ndarray, tol: float, what: str = "system") -> np.ndarray:
    """Minimum-norm least-squares solution of A x = b, rejected above `tol` relative residual."""
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = relative_residual(A, x, b)
    if res > tol:
        raise RepresentationError(
            f"{what}: relative residual {res:.3e} exceeds {tol:.1e} (insufficient data)",
            residual=res,
        )
    return x


def checked_inverse(M: np.ndarray, max_condition: float, what: str = "matrix") -> np.ndarray:
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > max_condition:
        raise ConditioningError(f"{what} is ill-conditioned (cond={cond:.3e})", condition=cond)
    return np.linalg.inv(M)


def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def spectral_abscissa(M: np.ndarray) -> float:
    if M.size == 0:
        return float("-inf")
    return float(np.max(np.linalg.eigvals(M).real))
