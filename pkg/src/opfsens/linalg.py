"""Dense linear algebra kernel: pivoted factorization, solves, numerical rank.

Matrices are plain ``numpy.ndarray`` (row-major, float64). The rank /
independence tolerance is fixed project-wide at :data:`RANK_REL_TOL` and every
caller that needs a different value passes it explicitly.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, Singular

# Project-wide relative tolerance for rank / independence decisions.
RANK_REL_TOL = 1e-10

# A pivot below this fraction of ||A||_inf marks a dependent constraint stack.
SINGULAR_PIVOT_REL = 1e-12


def lu_factor_checked(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """LU-factor a square matrix with partial pivoting.

    Raises :class:`Singular` when any pivot magnitude falls below
    ``SINGULAR_PIVOT_REL * ||a||_inf``, which signals a dependent row stack
    rather than a numerical accident.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if a.size == 0:
        raise DimensionMismatch("empty matrix")
    norm = np.abs(a).sum(axis=1).max()  # ||a||_inf
    with warnings.catch_warnings():
        # exact singularity is an expected, handled outcome here
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if norm == 0.0 or pivots.min() <= SINGULAR_PIVOT_REL * norm:
        raise Singular(
            f"pivot {pivots.min():.3e} below threshold {SINGULAR_PIVOT_REL * norm:.3e}"
        )
    return lu, piv


def lu_solve_factored(factors: tuple[np.ndarray, np.ndarray], rhs: np.ndarray) -> np.ndarray:
    """Solve with factors from :func:`lu_factor_checked`."""
    return sla.lu_solve(factors, np.asarray(rhs, dtype=float), check_finite=False)


def factor_solve(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = rhs`` by LU with partial pivoting.

    Parameters
    ----------
    a:
        Square coefficient matrix.
    rhs:
        Right-hand side, one vector per column (1-D input is treated as a
        single column and returned 1-D).

    Raises
    ------
    Singular
        If a pivot falls below ``SINGULAR_PIVOT_REL * ||a||_inf``.
    DimensionMismatch
        If shapes are inconsistent.
    """
    a = np.asarray(a, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != a.shape[0]:
        raise DimensionMismatch(
            f"rhs has {rhs.shape[0]} rows, matrix has {a.shape[0]}"
        )
    return lu_solve_factored(lu_factor_checked(a), rhs)


def invert(a: np.ndarray) -> np.ndarray:
    """Inverse via :func:`factor_solve` against the identity."""
    a = np.asarray(a, dtype=float)
    return factor_solve(a, np.eye(a.shape[0]))


def numerical_rank(a: np.ndarray, rel_tol: float = RANK_REL_TOL) -> int:
    """Numerical rank by row echelon reduction with partial pivoting.

    The rank is the number of pivots whose magnitude exceeds
    ``rel_tol * largest pivot``. An empty matrix has rank 0.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    a = np.array(a, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    m, n = a.shape
    if m == 0 or n == 0:
        return 0

    pivots: list[float] = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        sub = np.abs(a[row:, col])
        k = int(np.argmax(sub))
        pivot = sub[k]
        if pivot == 0.0:
            continue
        if k != 0:
            a[[row, row + k]] = a[[row + k, row]]
        below = a[row + 1 :, col] / a[row, col]
        a[row + 1 :, :] -= np.outer(below, a[row, :])
        pivots.append(pivot)
        row += 1

    if not pivots:
        return 0
    largest = max(pivots)
    return int(sum(p > rel_tol * largest for p in pivots))


def rcond_estimate(a: np.ndarray) -> float:
    """Reciprocal condition number in the 1-norm (0.0 when singular)."""
    a = np.asarray(a, dtype=float)
    try:
        cond = np.linalg.cond(a, 1)
    except np.linalg.LinAlgError:
        return 0.0
    if not np.isfinite(cond) or cond == 0.0:
        return 0.0
    return 1.0 / cond
