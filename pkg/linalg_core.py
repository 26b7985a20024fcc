"""
Dense complex operator arithmetic on the truncated initial space.

Operators are numpy complex128 arrays of shape (d, d). Every block inverse in
the network calculus goes through op_inverse so singular pivots fail the same
way everywhere: a partial-pivot LU whose smallest |U_kk| drops below
sing_tol times the largest absolute entry of the input.
"""

import logging
import os
import warnings

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from errors import ConfigError, DimMismatch, InvariantViolation, Singular

logger = logging.getLogger(__name__)

DEFAULT_SING_TOL = 1e-12
DEFAULT_EQ_TOL = 1e-9

# Env override for eq_tol (CLI and API)
TOL_ENV_VAR = "QFN_TOL"


class Tolerances(BaseModel):
    """sing_tol: relative pivot threshold. eq_tol: element-wise comparison threshold."""

    model_config = ConfigDict(frozen=True)

    sing_tol: float = DEFAULT_SING_TOL
    eq_tol: float = DEFAULT_EQ_TOL

    @model_validator(mode="after")
    def _check_order(self):
        if not (0 < self.sing_tol <= self.eq_tol < 1):
            raise ValueError(f"need 0 < sing_tol <= eq_tol < 1, got sing_tol={self.sing_tol}, eq_tol={self.eq_tol}")
        return self

    @classmethod
    def with_eq_tol(cls, eq_tol: float) -> "Tolerances":
        try:
            return cls(sing_tol=min(DEFAULT_SING_TOL, eq_tol), eq_tol=eq_tol)
        except ValueError as e:
            raise ConfigError(f"Invalid tolerance {eq_tol!r}: {e}", block="tol") from e


def default_tolerances() -> Tolerances:
    """Default tolerances, with QFN_TOL overriding eq_tol when set."""
    raw = os.environ.get(TOL_ENV_VAR)
    if raw in (None, ""):
        return Tolerances()
    try:
        eq_tol = float(raw)
    except ValueError as e:
        raise ConfigError(f"{TOL_ENV_VAR}={raw!r} is not a number", block="tol") from e
    return Tolerances.with_eq_tol(eq_tol)


# ============================================
# CONSTRUCTION
# ============================================

def as_operator(data, dim: int = None) -> np.ndarray:
    """Public Operator constructor: square, non-empty, finite complex matrix."""
    A = np.array(data, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimMismatch(f"Operator must be a non-empty square matrix, got shape {A.shape}")
    if dim is not None and A.shape[0] != dim:
        raise DimMismatch(f"Operator must be {dim}x{dim}, got {A.shape[0]}x{A.shape[1]}")
    if not np.all(np.isfinite(A)):
        raise InvariantViolation("Operator entries must be finite")
    A.flags.writeable = False
    return A


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)


def max_abs(A: np.ndarray) -> float:
    """Max absolute entry; 0 for empty arrays."""
    return float(np.max(np.abs(A))) if A.size else 0.0


def max_abs_diff(A: np.ndarray, B: np.ndarray) -> float:
    if A.shape != B.shape:
        raise DimMismatch(f"Cannot compare shapes {A.shape} and {B.shape}")
    return max_abs(np.asarray(A) - np.asarray(B))


# ============================================
# INVERSION
# ============================================

def _factor(A: np.ndarray):
    with warnings.catch_warnings():
        # exact zero pivots are reported through relative_pivot instead
        warnings.simplefilter("ignore", LinAlgWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        return lu_factor(A, check_finite=False)


def relative_pivot(A: np.ndarray) -> float:
    """
    Smallest |U_kk| of the partial-pivot LU of A, divided by the largest
    absolute entry of A. 1.0 for an empty matrix, 0.0 for a zero matrix.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimMismatch(f"Pivot test needs a square matrix, got shape {A.shape}")
    if A.shape[0] == 0:
        return 1.0
    scale = max_abs(A)
    if scale == 0.0:
        return 0.0
    lu, _ = _factor(A)
    return float(np.min(np.abs(np.diag(lu)))) / scale


def is_invertible(A: np.ndarray, tol: Tolerances) -> bool:
    return relative_pivot(A) >= tol.sing_tol


def op_inverse(A: np.ndarray, tol: Tolerances, block: str = None) -> np.ndarray:
    """Inverse of a square matrix; raises Singular when a pivot fails."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimMismatch(f"Cannot invert non-square shape {A.shape}")
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)

    scale = max_abs(A)
    if scale == 0.0:
        raise Singular(f"{block or 'matrix'} is zero", block=block, smallest_pivot=0.0)

    lu, piv = _factor(A)
    pivot = float(np.min(np.abs(np.diag(lu)))) / scale
    if pivot < tol.sing_tol:
        logger.debug(f"Singular pivot {pivot:.3e} in {block or 'matrix'} ({n}x{n})")
        raise Singular(
            f"{block or 'matrix'} is singular (relative pivot {pivot:.3e} < {tol.sing_tol:.1e})",
            block=block,
            smallest_pivot=pivot,
        )
    return lu_solve((lu, piv), np.eye(n, dtype=np.complex128), check_finite=False)


# ============================================
# STRUCTURE
# ============================================

def op_adjoint(A: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(A)).T


def imag_part(X: np.ndarray) -> np.ndarray:
    """Im X = (X - X†) / 2i, always Hermitian."""
    X = np.asarray(X, dtype=np.complex128)
    return (X - op_adjoint(X)) / 2j


def is_unitary(A: np.ndarray, tol: Tolerances) -> bool:
    A = np.asarray(A, dtype=np.complex128)
    eye = np.eye(A.shape[0], dtype=np.complex128)
    Ad = op_adjoint(A)
    return max_abs(Ad @ A - eye) <= tol.eq_tol and max_abs(A @ Ad - eye) <= tol.eq_tol


def is_selfadjoint(A: np.ndarray, tol: Tolerances) -> bool:
    A = np.asarray(A, dtype=np.complex128)
    return max_abs(A - op_adjoint(A)) <= tol.eq_tol
