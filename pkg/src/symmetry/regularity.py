"""
Regularity scales.

r^j_u(x) is the largest r ≤ 1 with sup_{B_r(x)} Σ_{i≤j} r^i |D^i u| ≤ r^{-2/(p-1)},
found by bisection. The inner supremum runs over a fixed Halton sample of
the ball, its centre and the ball point closest to the singular set.
"""

import logging
from typing import Optional

import numpy as np

from ..core.exceptions import UnsupportedOrder, ValidationError
from ..core.sampling import halton_ball
from ..fields import BaseField, GridField

logger = logging.getLogger(__name__)

BISECTION_STEPS = 60
BALL_SAMPLES = 256


def _probe_points(u: BaseField, x: np.ndarray, r: float, unit_sample: np.ndarray) -> np.ndarray:
    points = [x[None, :], x + r * unit_sample]
    foot = u.nearest_singular_point(x)
    if foot is not None:
        offset = foot - x
        distance = float(np.linalg.norm(offset))
        closest = foot if distance <= r else x + r * offset / distance
        points.append(closest[None, :])
    return np.concatenate(points)


def _scaled_derivative_sup(u: BaseField, points: np.ndarray, r: float, j: int) -> float:
    total = np.zeros(points.shape[0])
    for i in range(j + 1):
        total = total + r ** i * u.derivative_norm(points, i)
    return float(np.max(total))


def _domain_cap(u: BaseField, x: np.ndarray) -> float:
    """Largest radius ≤ 1 whose ball stays in the domain."""
    if u.contains_ball(x, 1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if u.contains_ball(x, mid):
            lo = mid
        else:
            hi = mid
    return lo


def regularity_scale(u: BaseField, x, j: int, samples: int = BALL_SAMPLES) -> float:
    """
    The j-th regularity scale of u at x (capped at 1, or at the domain edge).

    Raises:
        UnsupportedOrder: j >= 3 on a grid field
        ValidationError: negative j
    """
    if j < 0:
        raise ValidationError("j", str(j), "a nonnegative derivative order")
    if isinstance(u, GridField) and j >= 3:
        raise UnsupportedOrder(j, "grid")
    x = np.asarray(x, dtype=float).reshape(u.n)
    alpha = u.params.alpha
    unit_sample = halton_ball(u.n, samples)

    def holds(r: float) -> bool:
        if r == 0.0:
            return bool(np.isfinite(_scaled_derivative_sup(u, x[None, :], 0.0, j)))
        sup = _scaled_derivative_sup(u, _probe_points(u, x, r, unit_sample), r, j)
        return bool(np.isfinite(sup)) and r ** alpha * sup <= 1.0

    if not holds(0.0):
        return 0.0
    cap = _domain_cap(u, x)
    if holds(cap):
        return cap

    lo, hi = 0.0, cap
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    logger.debug(f"Regularity scale j={j} at {x.tolist()}: {lo:.6g}")
    return lo
