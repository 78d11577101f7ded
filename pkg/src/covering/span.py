"""
Effective span of a point set.

Points x_0, ..., x_k are ρ-independent when each lies at distance ≥ 2ρ from
the affine span of the ones before it. The greedy certificate starts at the
first point and keeps adding the farthest point (lowest index on ties).
"""

import logging
from typing import Tuple

import numpy as np

from ..core.exceptions import ValidationError
from ..subspace import AffineSubspace

logger = logging.getLogger(__name__)


def span_subspace(basis_points) -> AffineSubspace:
    """The affine span of the given points, as base + orthonormal frame."""
    pts = np.asarray(basis_points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValidationError("basis_points", str(pts.shape), "a nonempty (k+1, n) array")
    base = pts[0]
    if pts.shape[0] == 1:
        return AffineSubspace(base, np.zeros((0, pts.shape[1])))
    q, _ = np.linalg.qr((pts[1:] - base).T)
    return AffineSubspace(base, q.T)


def effective_span(points, rho: float) -> Tuple[int, np.ndarray]:
    """
    Greedy ρ-independent subset of ``points``.

    Args:
        points: (N, n) array, N ≥ 1
        rho: Independence scale; new points need distance ≥ 2ρ to the span

    Returns:
        (k, basis_points (k+1, n)) with k the certified dimension
    """
    if not rho > 0:
        raise ValidationError("rho", str(rho), "a positive scale")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValidationError("points", str(pts.shape), "a nonempty (N, n) array")

    n = pts.shape[1]
    selected = [0]
    base = pts[0]
    directions = np.zeros((0, n))
    offsets = pts - base
    while len(selected) <= n:
        along = offsets @ directions.T
        sq = np.einsum("ij,ij->i", offsets, offsets) - np.einsum("ij,ij->i", along, along)
        distances = np.sqrt(np.maximum(sq, 0.0))
        index = int(np.argmax(distances))
        if distances[index] < 2.0 * rho:
            break
        selected.append(index)
        residual = offsets[index] - along[index] @ directions
        directions = np.vstack([directions, residual / np.linalg.norm(residual)])

    k = len(selected) - 1
    logger.debug(f"Effective span of {pts.shape[0]} points at rho={rho:.4g}: k={k}")
    return k, pts[selected]
