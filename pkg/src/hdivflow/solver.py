"""Sparse direct solution of the saddle-point system.

SuperLU (through :func:`scipy.sparse.linalg.splu`) with a COLAMD
column ordering and threshold partial pivoting, followed by iterative
refinement steps until the residual stops improving.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularSystemError(RuntimeError):
    """The matrix is structurally or numerically singular."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class ConvergenceError(RuntimeError):
    """The residual stays above tolerance after refinement."""

    def __init__(self, message, relative_residual):
        super().__init__(message)
        self.relative_residual = relative_residual


@dataclass
class SolveReport:
    solution: np.ndarray
    relative_residual: float
    stats: dict = field(default_factory=dict)


def relative_residual(A, x, b):
    r = b - A @ x
    return float(np.linalg.norm(r) / max(np.linalg.norm(b), 1e-300))


def factorize(A):
    """LU-factorize a square sparse matrix; raises :class:`SingularSystemError`."""
    A = sp.csc_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    empty_rows = np.flatnonzero(np.diff(sp.csr_matrix(A).indptr) == 0)
    empty_cols = np.flatnonzero(np.diff(A.indptr) == 0)
    if len(empty_rows) or len(empty_cols):
        where = int(empty_rows[0]) if len(empty_rows) else int(empty_cols[0])
        raise SingularSystemError(f"structurally singular: empty row/column {where}", where)
    try:
        return spla.splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        # SuperLU reports "Factor is exactly singular" with U(k,k) == 0
        pivot = None
        digits = "".join(ch if ch.isdigit() else " " for ch in str(exc)).split()
        if digits:
            pivot = int(digits[0])
        raise SingularSystemError(f"singular matrix: {exc}", pivot) from exc


def solve(system, tolerance=1e-10, max_refinements=3):
    """Solve ``system`` (a :class:`SaddleSystem` or ``(matrix, rhs)`` pair).

    Returns
    -------
    SolveReport
        ``stats`` holds ``fill_in`` (nnz of L + U), ``refinements`` and
        ``elapsed`` seconds.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    if isinstance(system, tuple):
        A, b = system
    else:
        A, b = system.matrix, system.rhs
    A = sp.csc_matrix(A)
    b = np.asarray(b, dtype=float)

    t0 = time.perf_counter()
    lu = factorize(A)
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("numerically singular: non-finite solution")
    res = relative_residual(A, x, b)
    steps = 0
    while steps < max_refinements and res > 0:
        dx = lu.solve(b - A @ x)
        x_new = x + dx
        res_new = relative_residual(A, x_new, b)
        if not res_new < res:
            break
        x, res = x_new, res_new
        steps += 1
    elapsed = time.perf_counter() - t0

    if res > tolerance:
        raise ConvergenceError(
            f"relative residual {res:.3e} exceeds tolerance {tolerance:.1e}", res
        )
    stats = dict(fill_in=int(lu.L.nnz + lu.U.nnz), refinements=steps, elapsed=elapsed)
    return SolveReport(x, res, stats)
