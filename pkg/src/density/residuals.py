"""
Weak and stationary residuals against compactly supported test fields.

Test fields are built from the smooth bump η(y) = exp(1 - 1/(1 - t)),
t = |y - c|²/ρ², supported in B_ρ(c). Residual estimates carry in
``magnitude`` the integral of the absolute values of their terms, the
natural scale for relative comparisons.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..core.config import QuadratureConfig
from ..core.exceptions import ValidationError
from ..fields import BaseField, as_points
from .quadrature import Estimate, FieldSample, integrate_ball

logger = logging.getLogger(__name__)


def _bump(offsets: np.ndarray, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """η and ∇η at the given offsets y - c."""
    t = np.einsum("ij,ij->i", offsets, offsets) / (radius * radius)
    inside = t < 1.0
    safe = np.where(inside, 1.0 - t, 1.0)
    eta = np.where(inside, np.exp(1.0 - 1.0 / safe), 0.0)
    slope = np.where(inside, -eta / (safe * safe), 0.0) * (2.0 / (radius * radius))
    return eta, slope[:, None] * offsets


@dataclass(frozen=True)
class ScalarTestFunction:
    """amplitude · η, supported in B_radius(center)."""
    center: np.ndarray
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())
        if not self.radius > 0:
            raise ValidationError("radius", str(self.radius), "a positive support radius")

    def evaluate(self, points) -> Tuple[np.ndarray, np.ndarray]:
        """(value, gradient) at points."""
        pts = as_points(points, self.center.size)
        eta, grad = _bump(pts - self.center, self.radius)
        return self.amplitude * eta, self.amplitude * grad


@dataclass(frozen=True)
class VectorTestField:
    """Y(y) = η(y) (A (y - center) + shift), supported in B_radius(center)."""
    center: np.ndarray
    radius: float
    matrix: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))
        object.__setattr__(self, "shift", np.asarray(self.shift, dtype=float).ravel())
        if not self.radius > 0:
            raise ValidationError("radius", str(self.radius), "a positive support radius")
        n = self.center.size
        if self.matrix.shape != (n, n) or self.shift.shape != (n,):
            raise ValidationError("matrix", str(self.matrix.shape), f"an ({n}, {n}) matrix and a length-{n} shift")

    def evaluate(self, points) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(η, ∇η, A d + shift) at points; enough to assemble Y, DY and div Y."""
        pts = as_points(points, self.center.size)
        offsets = pts - self.center
        eta, grad_eta = _bump(offsets, self.radius)
        return eta, grad_eta, offsets @ self.matrix.T + self.shift


def random_test_fields(
    n: int,
    count: int,
    seed: int = 0,
    spread: float = 0.3,
    radius: Tuple[float, float] = (0.4, 0.8),
) -> Tuple[List[ScalarTestFunction], List[VectorTestField]]:
    """Reproducible scalar and vector test fields with centres near the origin."""
    rng = np.random.default_rng(seed)
    scalars, vectors = [], []
    for _ in range(count):
        center = rng.uniform(-spread, spread, n)
        rad = float(rng.uniform(*radius))
        scalars.append(ScalarTestFunction(center, rad, float(rng.uniform(0.5, 1.5))))
        vectors.append(VectorTestField(center, rad, rng.normal(size=(n, n)), rng.normal(size=n)))
    return scalars, vectors


def _combine_terms(estimate: Estimate) -> Estimate:
    """Collapse a two-column term estimate into the residual value."""
    terms = np.asarray(estimate.value, dtype=float)
    return Estimate(
        float(np.sum(terms)), 2.0 * estimate.tolerance, estimate.rule,
        estimate.nodes, estimate.skipped_cells, estimate.magnitude,
    )


def stationarity_residual_estimate(
    u: BaseField, field: VectorTestField, settings: Optional[QuadratureConfig] = None
) -> Estimate:
    """
    ∫ (|∇u|²/2 - |u|^{p+1}/(p+1)) div Y - DY(∇u, ∇u).

    Raises:
        OutOfDomain: supp Y leaves the field's domain
    """
    u.require_ball(field.center, field.radius)
    p = u.params.p
    trace = float(np.trace(field.matrix))

    def integrand(sample: FieldSample) -> np.ndarray:
        eta, grad_eta, linear = field.evaluate(sample.points)
        g = sample.grad
        divergence = np.einsum("ij,ij->i", grad_eta, linear) + eta * trace
        energy = 0.5 * np.einsum("ij,ij->i", g, g) - np.abs(sample.u) ** (p + 1.0) / (p + 1.0)
        quadratic = (
            np.einsum("ij,ij->i", grad_eta, g) * np.einsum("ij,ij->i", linear, g)
            + eta * np.einsum("ij,jk,ik->i", g, field.matrix, g)
        )
        return np.stack([energy * divergence, -quadratic], axis=1)

    return _combine_terms(integrate_ball(u, field.center, [field.radius], integrand, settings))


def stationarity_residual(u: BaseField, field: VectorTestField, settings: Optional[QuadratureConfig] = None) -> float:
    return float(stationarity_residual_estimate(u, field, settings).value)


def weak_residual_estimate(
    u: BaseField, testfn: ScalarTestFunction, settings: Optional[QuadratureConfig] = None
) -> Estimate:
    """
    ∫ ∇u·∇φ - |u|^{p-1} u φ.

    Raises:
        OutOfDomain: supp φ leaves the field's domain
    """
    u.require_ball(testfn.center, testfn.radius)
    p = u.params.p

    def integrand(sample: FieldSample) -> np.ndarray:
        value, grad = testfn.evaluate(sample.points)
        return np.stack([
            np.einsum("ij,ij->i", sample.grad, grad),
            -np.abs(sample.u) ** (p - 1.0) * sample.u * value,
        ], axis=1)

    return _combine_terms(integrate_ball(u, testfn.center, [testfn.radius], integrand, settings))


def weak_residual(u: BaseField, testfn: ScalarTestFunction, settings: Optional[QuadratureConfig] = None) -> float:
    return float(weak_residual_estimate(u, testfn, settings).value)
