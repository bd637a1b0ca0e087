"""Dense linear-algebra kernels used by the solvers.

Everything here is dense and desk-scale (m, N up to a few hundred):
symmetric positive-definite solves via Cholesky, minimum-norm solutions of
underdetermined systems, projection onto affine sets {x : Ax = y}, column
submatrix extraction, and a pivot-based invertibility test.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import (
    InvalidIndexError,
    InvalidInputError,
    NotPositiveDefiniteError,
    RankDeficientError,
)

__all__ = [
    "solve_spd",
    "least_norm_solution",
    "affine_project",
    "submatrix_cols",
    "is_invertible",
]

_SYM_TOL = 1e-10


def _as_matrix(M, name: str = "M") -> np.ndarray:
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def _as_vector(b, name: str = "b") -> np.ndarray:
    arr = np.asarray(b, dtype=float).ravel()
    if arr.size and not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def solve_spd(M, b) -> np.ndarray:
    """Solve M z = b for symmetric positive-definite M via Cholesky."""
    M = _as_matrix(M)
    b = _as_vector(b)
    n = M.shape[0]
    if M.shape[1] != n or b.shape[0] != n:
        raise InvalidInputError(f"shape mismatch: M is {M.shape}, b has length {b.shape[0]}")
    scale = np.abs(M).max() if M.size else 0.0
    if np.abs(M - M.T).max(initial=0.0) > _SYM_TOL * max(1.0, scale):
        raise InvalidInputError("M is not symmetric")
    try:
        c, low = scipy.linalg.cho_factor(M, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    if np.abs(np.diag(c)).min() ** 2 <= 1e-14 * max(scale, 1e-300):
        raise NotPositiveDefiniteError("pivot below positive-definiteness threshold")
    return scipy.linalg.cho_solve((c, low), b, check_finite=False)


def _gram_factor(A: np.ndarray):
    """Cholesky factor of A A^T; raises RankDeficientError when A lacks row rank."""
    gram = A @ A.T
    try:
        c, low = scipy.linalg.cho_factor(gram, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise RankDeficientError("A A^T is numerically singular") from exc
    scale = np.abs(gram).max(initial=0.0)
    if np.abs(np.diag(c)).min() ** 2 <= 1e-14 * max(scale, 1e-300):
        raise RankDeficientError("A A^T is numerically singular")
    return c, low


def least_norm_solution(A, y) -> np.ndarray:
    """Minimum Euclidean-norm solution A^T (A A^T)^{-1} y of Ax = y.

    Requires A to have full row rank; the result is orthogonal to the null
    space of A and is the p=2 minimizer of the norm over the affine set.
    """
    A = _as_matrix(A, "A")
    y = _as_vector(y, "y")
    if A.shape[0] != y.shape[0]:
        raise InvalidInputError(f"A has {A.shape[0]} rows but y has length {y.shape[0]}")
    c = _gram_factor(A)
    return A.T @ scipy.linalg.cho_solve(c, y, check_finite=False)


def affine_project(A, y, x) -> np.ndarray:
    """Euclidean projection of x onto {z : Az = y}: x - A^T (A A^T)^{-1} (Ax - y)."""
    A = _as_matrix(A, "A")
    y = _as_vector(y, "y")
    x = _as_vector(x, "x")
    if A.shape[0] != y.shape[0] or A.shape[1] != x.shape[0]:
        raise InvalidInputError(
            f"shape mismatch: A is {A.shape}, y has length {y.shape[0]}, x has length {x.shape[0]}"
        )
    c = _gram_factor(A)
    return x - A.T @ scipy.linalg.cho_solve(c, A @ x - y, check_finite=False)


def submatrix_cols(A, indices) -> np.ndarray:
    """Columns of A selected by the index set, in ascending index order."""
    A = _as_matrix(A, "A")
    idx = np.asarray(sorted(indices), dtype=int)
    if idx.size == 0:
        raise InvalidIndexError("index set is empty")
    if len(set(idx.tolist())) != idx.size:
        raise InvalidIndexError("index set contains duplicates")
    if idx.min() < 0 or idx.max() >= A.shape[1]:
        raise InvalidIndexError(
            f"index out of range: valid columns are 0..{A.shape[1] - 1}"
        )
    return A[:, idx].copy()


def is_invertible(M, tol: float = 1e-12) -> bool:
    """Pivot test for invertibility of a square matrix.

    True iff the smallest absolute pivot of the pivoted LU factorization
    exceeds tol * max|M_ij|.
    """
    M = _as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"matrix must be square, got shape {M.shape}")
    if tol <= 0.0:
        raise InvalidInputError("tol must be positive")
    scale = np.abs(M).max()
    if scale == 0.0:
        return False
    with warnings.catch_warnings():
        # singular input is an expected answer here, not an anomaly
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, _ = scipy.linalg.lu_factor(M, check_finite=False)
    return bool(np.abs(np.diag(lu)).min() > tol * scale)
