"""
The fixed cutoff φ used by the modified density.

φ′ = −1 on [0, 8], φ′ = −S((9.5 − t)/1.5) on (8, 9.5) with the quintic
smoothstep S(s) = s³(6s² − 15s + 10), and φ′ = 0 from 9.5 on; φ(t) is the
integral of −φ′ from t to infinity. The ramp integrates exactly, so φ, φ′
and φ″ are all closed-form piecewise polynomials.
"""

import logging
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..core.exceptions import NegativeArgument, ValidationError

logger = logging.getLogger(__name__)

PLATEAU_END = 8.0
SUPPORT_END = 9.5
RAMP_WIDTH = SUPPORT_END - PLATEAU_END
# Area under the ramp: 1.5 * ∫_0^1 S = 0.75.
RAMP_AREA = 0.5 * RAMP_WIDTH


def _ramp_coordinate(t: np.ndarray) -> np.ndarray:
    return (SUPPORT_END - t) / RAMP_WIDTH


class CutoffPhi:
    """Vectorized evaluation of φ, φ′, φ″ and their power moments."""

    def phi(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        s = np.clip(_ramp_coordinate(t), 0.0, 1.0)
        ramp = RAMP_WIDTH * s ** 4 * (s * s - 3.0 * s + 2.5)
        return np.where(t <= PLATEAU_END, PLATEAU_END - t + RAMP_AREA, np.where(t < SUPPORT_END, ramp, 0.0))

    def phi_prime(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        s = np.clip(_ramp_coordinate(t), 0.0, 1.0)
        smooth = s ** 3 * (6.0 * s * s - 15.0 * s + 10.0)
        return np.where(t <= PLATEAU_END, -1.0, np.where(t < SUPPORT_END, -smooth, 0.0))

    def phi_second(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        s = np.clip(_ramp_coordinate(t), 0.0, 1.0)
        slope = 30.0 * s * s * (1.0 - s) ** 2 / RAMP_WIDTH
        return np.where((t > PLATEAU_END) & (t < SUPPORT_END), slope, 0.0)

    def moment(self, a: float) -> float:
        """∫_0^∞ t^a φ(t) dt for a > −1."""
        if a <= -1.0:
            raise ValidationError("a", str(a), "an exponent above -1")
        plateau = (PLATEAU_END + RAMP_AREA) * PLATEAU_END ** (a + 1) / (a + 1) - PLATEAU_END ** (a + 2) / (a + 2)
        nodes, weights = _ramp_rule()
        return float(plateau + np.sum(weights * nodes ** a * self.phi(nodes)))

    def derivative_moment(self, a: float) -> float:
        """∫_0^∞ t^a φ′(t) dt for a > −1."""
        if a <= -1.0:
            raise ValidationError("a", str(a), "an exponent above -1")
        plateau = -PLATEAU_END ** (a + 1) / (a + 1)
        nodes, weights = _ramp_rule()
        return float(plateau + np.sum(weights * nodes ** a * self.phi_prime(nodes)))


@lru_cache(maxsize=1)
def _ramp_rule() -> Tuple[np.ndarray, np.ndarray]:
    """64-point Gauss-Legendre rule on the ramp [8, 9.5]."""
    x, w = leggauss(64)
    nodes = PLATEAU_END + 0.5 * RAMP_WIDTH * (x + 1.0)
    return nodes, 0.5 * RAMP_WIDTH * w


PHI = CutoffPhi()


def cutoff_phi(t: float) -> Tuple[float, float]:
    """
    Evaluate the cutoff and its derivative at a nonnegative argument.

    Args:
        t: Argument, typically |y - x|² / r²

    Returns:
        (phi(t), phi_prime(t))

    Raises:
        NegativeArgument: t < 0
    """
    if t < 0:
        raise NegativeArgument(t)
    return float(PHI.phi(t)), float(PHI.phi_prime(t))
