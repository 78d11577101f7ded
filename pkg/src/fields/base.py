"""
Base field abstract class.

This module defines the abstract interface that every scalar field must
implement, plus the problem parameters shared by all of them. It provides a
consistent evaluation API for analytic and sampled fields.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..core.exceptions import OutOfDomain, SupercriticalityViolated, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension and exponent of -Δu = |u|^{p-1}u, with the derived scaling indices."""
    n: int
    p: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValidationError("n", str(self.n), "an integer dimension >= 3")
        if not math.isfinite(self.p) or self.p <= (self.n + 2) / (self.n - 2):
            raise SupercriticalityViolated(self.n, self.p)

    @property
    def alpha(self) -> float:
        return 2.0 / (self.p - 1.0)

    @property
    def alpha_p(self) -> float:
        return 2.0 * (self.p + 1.0) / (self.p - 1.0)

    @property
    def scaling_gap(self) -> float:
        """Exponent of r in the density normalization r^{alpha_p - n}."""
        return self.alpha_p - self.n

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "p": self.p}


def as_points(points, n: int) -> np.ndarray:
    """Coerce a point or a stack of points into an (M, n) float array."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != n:
        raise ValidationError("points", str(arr.shape), f"shape (n,) or (M, n) with n={n}")
    return arr


class BaseField(ABC):
    """
    Abstract base class for scalar fields on a subset of R^n.

    Fields are immutable after construction; every evaluation method is pure
    and vectorized over a leading point axis.
    """

    kind: str = "field"

    def __init__(self, params: ProblemParams):
        """
        Initialize the field.

        Args:
            params: Dimension and exponent of the equation
        """
        self.params = params

    @property
    def n(self) -> int:
        return self.params.n

    @abstractmethod
    def value(self, points) -> np.ndarray:
        """
        Evaluate u at points.

        Args:
            points: (n,) or (M, n) array

        Returns:
            (M,) array of values
        """
        pass

    @abstractmethod
    def gradient(self, points) -> np.ndarray:
        """Evaluate ∇u at points; returns an (M, n) array."""
        pass

    @abstractmethod
    def hessian(self, points) -> np.ndarray:
        """Evaluate D²u at points; returns an (M, n, n) array."""
        pass

    @abstractmethod
    def blow_up(self, x, r: float) -> "BaseField":
        """Return the field y ↦ r^{2/(p-1)} u(x + r y)."""
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready description that field_from_dict re-ingests exactly."""
        pass

    @property
    def is_homogeneous(self) -> bool:
        """True when every blow-up is a rigid motion of the field itself."""
        return False

    def contains_ball(self, x, radius: float) -> bool:
        """Whether B_radius(x) lies inside the field's domain."""
        return True

    def require_ball(self, x, radius: float) -> None:
        """Raise OutOfDomain unless B_radius(x) lies inside the domain."""
        if not self.contains_ball(x, radius):
            raise OutOfDomain(np.asarray(x, dtype=float).ravel(), radius, self.domain_description())

    def domain_description(self) -> str:
        return "(R^n)"

    def singular_distance(self, points) -> np.ndarray:
        """Distance from each point to the singular set (inf when there is none)."""
        pts = as_points(points, self.n)
        return np.full(pts.shape[0], np.inf)

    def nearest_singular_point(self, point) -> Optional[np.ndarray]:
        """Closest point of the singular set, or None for smooth fields."""
        return None

    def singular_skeleton(self, center, radius: float, spacing: float) -> np.ndarray:
        """Points of the singular set inside B_radius(center) on a lattice of the given spacing."""
        return np.zeros((0, self.n))

    def derivative_tensor(self, points, j: int) -> np.ndarray:
        """
        The j-th derivative tensor D^j u at points, shape (M,) + (n,)*j.

        Orders up to 2 are evaluated directly; higher orders use central
        differences of the order below.
        """
        if j < 0:
            raise ValidationError("j", str(j), "a nonnegative derivative order")
        if j == 0:
            return self.value(points)
        if j == 1:
            return self.gradient(points)
        if j == 2:
            return self.hessian(points)

        pts = as_points(points, self.n)
        scale = np.maximum(np.minimum(self.singular_distance(pts), 1.0), 1e-6)
        step = 1e-3 * scale
        slices = []
        for axis in range(self.n):
            shift = np.zeros_like(pts)
            shift[:, axis] = step
            forward = self.derivative_tensor(pts + shift, j - 1)
            backward = self.derivative_tensor(pts - shift, j - 1)
            denom = (2.0 * step).reshape((-1,) + (1,) * (j - 1))
            slices.append((forward - backward) / denom)
        return np.stack(slices, axis=-1)

    def derivative_norm(self, points, j: int) -> np.ndarray:
        """Frobenius norm |D^j u| at points."""
        tensor = self.derivative_tensor(points, j)
        if j == 0:
            norm = np.abs(tensor)
        else:
            flat = tensor.reshape(tensor.shape[0], -1)
            norm = np.sqrt(np.sum(flat * flat, axis=1))
        # 0 * inf on the singular set
        return np.where(np.isnan(norm), np.inf, norm)

    def fingerprint(self) -> str:
        """Stable identifier used for cache keys."""
        return repr(sorted(self.to_dict().items()))
