"""
Deterministic low-discrepancy point sets in balls.

Unscrambled Halton sequences make every sample reproducible across runs
and give prefix-stable families: the first N points never depend on how
many are requested.
"""

import logging
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from .exceptions import ValidationError

logger = logging.getLogger(__name__)


@lru_cache(maxsize=32)
def _unit_ball_halton(n: int, count: int) -> np.ndarray:
    sampler = qmc.Halton(d=n, scramble=False)
    kept = []
    total = 0
    while total < count:
        batch = 2.0 * sampler.random(max(64, 4 * (count - total) * 2 ** n // max(n, 1))) - 1.0
        inside = batch[np.einsum("ij,ij->i", batch, batch) <= 1.0]
        kept.append(inside)
        total += inside.shape[0]
    points = np.concatenate(kept)[:count]
    points.setflags(write=False)
    return points


def halton_ball(n: int, count: int, center=None, radius: float = 1.0) -> np.ndarray:
    """
    The first ``count`` Halton points falling in B_radius(center).

    Args:
        n: Dimension
        count: Number of points
        center: Ball centre (origin by default)
        radius: Ball radius

    Returns:
        (count, n) array
    """
    if count < 0:
        raise ValidationError("count", str(count), "a nonnegative count")
    if not radius > 0:
        raise ValidationError("radius", str(radius), "a positive radius")
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float).reshape(n)
    if count == 0:
        return np.zeros((0, n))
    return center + radius * _unit_ball_halton(n, count)
