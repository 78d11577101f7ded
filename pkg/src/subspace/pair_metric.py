"""
Distance between (field, measure) pairs on a ball.

The field part is r^{alpha_p-n-2} ∫_{B_r(x)} |u - v|². The measure part is a
truncation of the weak-* metric Σ 2^{-i} |Δ_i| / (1 + |Δ_i|), with Δ_i the
difference of the two measures tested against the i-th member of a fixed
family of tensor bumps (1 - s²)³₊ in normalized coordinates (y - x)/r.
Member i has level L = floor(log2 i) and is supported on one dyadic cell of
side 2^{1-L} of the cube [-1, 1]^n; member 1 covers the whole cube. Members
are indexed independently of the family size, so every family is a prefix
of every larger one.
"""

import logging
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from ..core.config import QuadratureConfig
from ..core.exceptions import DimensionMismatch, ValidationError
from ..density.quadrature import FieldSample, integrate_ball
from ..fields import BaseField
from .measure import DiscreteMeasure

logger = logging.getLogger(__name__)

DEFAULT_FAMILY_SIZE = 64


@lru_cache(maxsize=16)
def bump_family(n: int, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """(centres (size, n), half-sides (size,)) of the first ``size`` test bumps."""
    if size < 1:
        raise ValidationError("family size", str(size), "a positive member count")
    members = np.arange(1, size + 1)
    levels = np.floor(np.log2(members)).astype(int)
    half_sides = 2.0 ** (-levels.astype(float))
    # Member j of level L sits in the dyadic cell with index (j * m_d) mod 2^L
    # along axis d; odd multipliers make each axis a bijection.
    multipliers = 2 * np.arange(n) + 1
    within = members - 2 ** levels
    cells = (within[:, None] * multipliers[None, :]) % (2 ** levels)[:, None]
    centres = -1.0 + (2.0 * cells + 1.0) * half_sides[:, None]
    centres.setflags(write=False)
    half_sides.setflags(write=False)
    return centres, half_sides


def _bump_values(points: np.ndarray, centres: np.ndarray, half_sides: np.ndarray) -> np.ndarray:
    """(members, atoms) matrix of Π_d (1 - ((y_d - c_d)/h)²)³₊."""
    scaled = (points[None, :, :] - centres[:, None, :]) / half_sides[:, None, None]
    factors = np.clip(1.0 - scaled * scaled, 0.0, None) ** 3
    return np.prod(factors, axis=2)


def measure_distance(
    mu: DiscreteMeasure, eta: DiscreteMeasure, x, r: float, family_size: int = DEFAULT_FAMILY_SIZE
) -> float:
    """The truncated weak-* distance between μ and η viewed in B_r(x)."""
    n = mu.n if len(mu) else eta.n
    x = np.asarray(x, dtype=float).reshape(n)
    centres, half_sides = bump_family(n, family_size)

    def tested(measure: DiscreteMeasure) -> np.ndarray:
        if len(measure) == 0:
            return np.zeros(family_size)
        if measure.n != n:
            raise DimensionMismatch("measure dimension", n, measure.n)
        normalized = (measure.points - x) / r
        return _bump_values(normalized, centres, half_sides) @ measure.weights

    delta = np.abs(tested(mu) - tested(eta))
    weights = 0.5 ** np.arange(1, family_size + 1)
    return float(np.sum(weights * delta / (1.0 + delta)))


def field_distance(
    u: BaseField, v: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None
) -> float:
    """
    r^{alpha_p-n-2} ∫_{B_r(x)} |u - v|².

    The integral is the mean of the rules anchored at each field's singular
    set, so field_distance(u, v) == field_distance(v, u) exactly.
    """
    if u.n != v.n:
        raise DimensionMismatch("field dimension", u.n, v.n)
    if u.params.p != v.params.p:
        raise ValidationError("p", f"{u.params.p} and {v.params.p}", "fields with the same exponent")
    x = np.asarray(x, dtype=float).reshape(u.n)
    u.require_ball(x, r)
    v.require_ball(x, r)

    def squared_difference(other: BaseField):
        def integrand(sample: FieldSample) -> np.ndarray:
            values = other.value(sample.points)
            # Both fields infinite at the same node would give inf - inf.
            difference = np.where(np.isinf(sample.u) & (sample.u == values), 0.0, sample.u - values)
            return difference ** 2
        return integrand

    on_u = float(integrate_ball(u, x, [r], squared_difference(v), settings).value)
    on_v = float(integrate_ball(v, x, [r], squared_difference(u), settings).value)
    return 0.5 * (on_u + on_v) * r ** (u.params.scaling_gap - 2.0)


def pair_distance(
    u: BaseField,
    mu: DiscreteMeasure,
    v: BaseField,
    eta: DiscreteMeasure,
    x,
    r: float,
    family_size: int = DEFAULT_FAMILY_SIZE,
    settings: Optional[QuadratureConfig] = None,
) -> float:
    """
    field_distance(u, v) + measure_distance(μ, η) on B_r(x).

    Raises:
        OutOfDomain: B_r(x) leaves either field's domain
    """
    if not r > 0:
        raise ValidationError("r", str(r), "a positive scale")
    return field_distance(u, v, x, r, settings) + measure_distance(mu, eta, x, r, family_size)
