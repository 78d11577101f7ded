"""
Cyclic Jacobi eigensolver for small symmetric matrices.

Sweeps rotate every (p, q) pair in row order until the off-diagonal
Frobenius norm drops below 1e-13 times the trace, so results do not depend
on any LAPACK driver choice.
"""

import logging
import math
from typing import Tuple

import numpy as np

from ..core.exceptions import DimensionMismatch, ValidationError

logger = logging.getLogger(__name__)

OFF_DIAGONAL_TOLERANCE = 1e-13
MAX_SWEEPS = 100


def _off_diagonal_norm(a: np.ndarray) -> float:
    return math.sqrt(max(float(np.sum(a * a) - np.sum(np.diag(a) ** 2)), 0.0))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Zero a[p, q] in place by one Jacobi rotation, accumulating it into v."""
    apq = a[p, q]
    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c

    col_p, col_q = a[:, p].copy(), a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q
    row_p, row_q = a[p, :].copy(), a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    a[p, q] = a[q, p] = 0.0

    vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
    v[:, p] = c * vec_p - s * vec_q
    v[:, q] = s * vec_p + c * vec_q


def canonical_signs(vectors: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip columns so the first coordinate above tol in magnitude is positive."""
    out = vectors.copy()
    for i in range(out.shape[1]):
        column = out[:, i]
        nonzero = np.flatnonzero(np.abs(column) > tol)
        if nonzero.size and column[nonzero[0]] < 0:
            out[:, i] = -column
    return out


def jacobi_eigh(matrix) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Eigen-decompose a real symmetric matrix.

    Args:
        matrix: (n, n) symmetric array

    Returns:
        (eigenvalues descending, eigenvectors as columns, sweeps used)

    Raises:
        DimensionMismatch: matrix is not square
        ValidationError: matrix is not symmetric
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("matrix", "square", str(a.shape))
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > 1e-12 * max(1.0, float(np.max(np.abs(a)))):
        raise ValidationError("matrix", f"asymmetry {asym:.3e}", "a symmetric matrix")
    a = 0.5 * (a + a.T)

    n = a.shape[0]
    v = np.eye(n)
    scale = max(abs(float(np.trace(a))), float(np.max(np.abs(a))) if a.size else 0.0)
    threshold = OFF_DIAGONAL_TOLERANCE * scale

    sweeps = 0
    while _off_diagonal_norm(a) > threshold and sweeps < MAX_SWEEPS:
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > 1e-300:
                    _rotate(a, v, p, q)
        sweeps += 1

    if sweeps == MAX_SWEEPS:
        logger.warning(f"Jacobi eigensolve stopped after {MAX_SWEEPS} sweeps, off-diagonal {_off_diagonal_norm(a):.3e}")

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], canonical_signs(v[:, order]), sweeps
