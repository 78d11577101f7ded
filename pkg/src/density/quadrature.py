"""
Ball quadrature for analytic and sampled fields.

Analytic fields use a product rule: Gauss-Legendre along rays times a
hyperspherical product rule (Gauss-Jacobi in the cosines of the polar
angles, uniform in the azimuth). Rays start at an anchor: the nearest
singular point when it lies inside the ball, the ball centre otherwise.
From a singular anchor the first radial segment is graded so that the
radial power singularity becomes polynomial in the Gauss variable. For a
singular line the pole of the angular rule is aligned with the line and
the first polar angle is graded the same way.

Grid fields use the midpoint rule over the cells whose centre lies in the
ball; the tolerance compares it with the rule on the stride-2 sub-lattice.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gamma, roots_jacobi

from ..core.config import QuadratureConfig, quadrature_settings
from ..core.exceptions import BallTooSmall, NonFiniteIntegrand
from ..fields import BaseField, GridField, PowerLawField

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Estimate:
    """A quadrature value with its error estimate and rule metadata."""
    value: Union[float, np.ndarray]
    tolerance: float
    rule: str
    nodes: int = 0
    skipped_cells: int = 0
    magnitude: float = 0.0

    def __float__(self) -> float:
        return float(self.value)

    def scaled(self, factor: float) -> "Estimate":
        return Estimate(
            self.value * factor, abs(factor) * self.tolerance, self.rule, self.nodes,
            self.skipped_cells, abs(factor) * self.magnitude,
        )

    def combine(self, other: "Estimate", sign: float = 1.0) -> "Estimate":
        """self + sign * other, tolerances added."""
        rule = self.rule if self.rule == other.rule else f"{self.rule}+{other.rule}"
        return Estimate(
            self.value + sign * other.value,
            self.tolerance + other.tolerance,
            rule,
            self.nodes + other.nodes,
            self.skipped_cells + other.skipped_cells,
            self.magnitude + other.magnitude,
        )

    def to_dict(self) -> dict:
        value = self.value.tolist() if isinstance(self.value, np.ndarray) else float(self.value)
        return {
            "value": value,
            "tolerance": float(self.tolerance),
            "rule": self.rule,
            "nodes": int(self.nodes),
            "skipped_cells": int(self.skipped_cells),
        }


@dataclass
class FieldSample:
    """Field data at quadrature nodes, handed to integrands."""
    points: np.ndarray
    offsets: np.ndarray
    u: np.ndarray
    grad: np.ndarray

    @property
    def sq_dist(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.offsets, self.offsets)


Integrand = Callable[[FieldSample], np.ndarray]


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1}."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


def _graded_half_rule(order: int, grading: float, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Polar nodes on [0, π] graded towards both poles, weights include sin^{n-2}θ."""
    x, w = leggauss(order)
    sigma = 0.5 * (x + 1.0)
    theta = 0.5 * math.pi * sigma ** grading
    weight = 0.25 * math.pi * grading * sigma ** (grading - 1.0) * w * np.sin(theta) ** (n - 2)
    thetas = np.concatenate([theta, math.pi - theta[::-1]])
    weights = np.concatenate([weight, weight[::-1]])
    return np.cos(thetas), np.sin(thetas), weights


@lru_cache(maxsize=64)
def sphere_rule(n: int, order: int, polar_grading: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Hyperspherical product rule on S^{n-1} with pole e_1.

    Polar angle k (k = 1..n-2) carries the weight sin^{n-1-k}; in t = cos θ
    that is the Jacobi weight (1 - t²)^{(n-2-k)/2}. The azimuth uses
    2*order equispaced points. Weights sum to the sphere area.

    Args:
        n: Ambient dimension
        order: Nodes per polar angle
        polar_grading: Grade the first polar angle towards both poles with
            this exponent (2*order nodes); None for plain Gauss-Jacobi

    Returns:
        (directions (N, n), weights (N,)) as read-only arrays
    """
    factors = []
    for k in range(1, n - 1):
        if k == 1 and polar_grading is not None:
            factors.append(_graded_half_rule(order, polar_grading, n))
            continue
        a = 0.5 * (n - 2 - k)
        t, w = roots_jacobi(order, a, a)
        factors.append((t, np.sqrt(np.clip(1.0 - t * t, 0.0, None)), w))

    count = 2 * order
    phi = (np.arange(count) + 0.5) * (2.0 * math.pi / count)
    azimuth = (np.cos(phi), np.sin(phi), np.full(count, 2.0 * math.pi / count))

    sizes = [len(f[2]) for f in factors] + [count]
    grids = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
    index = [g.ravel() for g in grids]

    total = index[0].size
    dirs = np.empty((total, n))
    weights = np.ones(total)
    prefix = np.ones(total)
    for k, (cos_k, sin_k, w_k) in enumerate(factors):
        dirs[:, k] = prefix * cos_k[index[k]]
        prefix = prefix * sin_k[index[k]]
        weights = weights * w_k[index[k]]
    dirs[:, n - 2] = prefix * azimuth[0][index[-1]]
    dirs[:, n - 1] = prefix * azimuth[1][index[-1]]
    weights = weights * azimuth[2][index[-1]]

    logger.debug(f"Built sphere rule n={n} order={order} grading={polar_grading}: {total} directions")
    dirs.setflags(write=False)
    weights.setflags(write=False)
    return dirs, weights


def complete_basis(pole: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose first column is the unit vector ``pole``."""
    n = pole.size
    q, _ = np.linalg.qr(np.column_stack([pole, np.eye(n)]))
    if q[:, 0] @ pole < 0:
        q = -q
    return q


def _graded_exponent(power: float) -> float:
    """Grading q making s^{q * power - 1} a polynomial (q = 1 for integer powers)."""
    if power <= 0:
        return 1.0
    return math.ceil(power - 1e-12) / power


@dataclass
class BallRule:
    """Ray-based product rule over nested balls centred at ``center``."""
    center: np.ndarray
    anchor: np.ndarray
    breakpoints: List[float]
    directions: np.ndarray
    angular_weights: np.ndarray
    radial_nodes: List[int]
    radial_grading: float = 1.0
    name: str = "centered_product"

    @property
    def node_count(self) -> int:
        return self.directions.shape[0] * sum(self.radial_nodes)

    def blocks(self, chunk_nodes: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Yield (points, weights) blocks of at most about chunk_nodes nodes."""
        n = self.center.size
        delta = self.anchor - self.center
        dd = float(delta @ delta)
        segments = [leggauss(count) for count in self.radial_nodes]
        per_direction = sum(self.radial_nodes)
        step = max(1, chunk_nodes // per_direction)

        for start in range(0, self.directions.shape[0], step):
            dirs = self.directions[start:start + step]
            w_ang = self.angular_weights[start:start + step]
            proj = dirs @ delta
            exits = [-proj + np.sqrt(np.maximum(proj * proj - dd + b * b, 0.0)) for b in self.breakpoints]

            radii, dradii = [], []
            lower = np.zeros(dirs.shape[0])
            for i, (x, w) in enumerate(segments):
                s = 0.5 * (x + 1.0)
                ws = 0.5 * w
                upper = exits[i]
                if i == 0 and self.radial_grading != 1.0:
                    q = self.radial_grading
                    rho = upper[:, None] * s[None, :] ** q
                    drho = upper[:, None] * q * s[None, :] ** (q - 1.0) * ws[None, :]
                else:
                    span = (upper - lower)[:, None]
                    rho = lower[:, None] + span * s[None, :]
                    drho = span * ws[None, :]
                radii.append(rho)
                dradii.append(drho)
                lower = upper

            rho = np.concatenate(radii, axis=1)
            drho = np.concatenate(dradii, axis=1)
            points = self.anchor[None, None, :] + rho[:, :, None] * dirs[:, None, :]
            weights = w_ang[:, None] * drho * rho ** (n - 1)
            yield points.reshape(-1, n), weights.ravel()


def build_ball_rule(
    u: BaseField,
    x: np.ndarray,
    breakpoints: Sequence[float],
    settings: QuadratureConfig,
) -> BallRule:
    """
    Choose the anchor and the gradings for integrating u over B_{max(breakpoints)}(x).

    Breakpoint spheres that do not strictly contain the anchor are dropped so
    every ray crosses each remaining sphere once.
    """
    n = u.n
    x = np.asarray(x, dtype=float).reshape(n)
    breakpoints = sorted(float(b) for b in breakpoints)
    outer = breakpoints[-1]
    order = settings.angular_order_for(n)

    anchor = x
    name = "centered_product"
    radial_grading = 1.0
    polar_grading = None
    pole = np.eye(n)[0]

    foot = u.nearest_singular_point(x)
    if foot is not None and float(np.linalg.norm(foot - x)) < outer * (1.0 - 1e-9):
        anchor = foot
        name = "anchored_product"
        alpha_p = u.params.alpha_p
        radial_grading = _graded_exponent(n - alpha_p)
        if isinstance(u, PowerLawField) and u.m == 1:
            pole = u.frame[0]
            polar_grading = _graded_exponent(n - 1 - alpha_p)

    gap = float(np.linalg.norm(anchor - x))
    kept = [b for b in breakpoints if b > gap * (1.0 + 1e-12)]
    base = settings.radial_nodes
    radial_nodes = [base] + [max(16, base // 2)] * (len(kept) - 1)

    dirs, weights = sphere_rule(n, order, polar_grading)
    basis = complete_basis(pole)
    return BallRule(
        center=x,
        anchor=anchor,
        breakpoints=kept,
        directions=dirs @ basis.T,
        angular_weights=np.asarray(weights),
        radial_nodes=radial_nodes,
        radial_grading=radial_grading,
        name=name,
    )


def _accumulate(u: BaseField, rule: BallRule, integrand: Integrand, chunk_nodes: int):
    total = None
    magnitude = 0.0
    for points, weights in rule.blocks(chunk_nodes):
        sample = FieldSample(points, points - rule.center, u.value(points), u.gradient(points))
        values = np.asarray(integrand(sample), dtype=float)
        if not np.all(np.isfinite(values)):
            raise NonFiniteIntegrand(
                f"{int(np.count_nonzero(~np.isfinite(values)))} non-finite samples ({rule.name} rule)"
            )
        shaped = weights.reshape((-1,) + (1,) * (values.ndim - 1))
        block = np.sum(shaped * values, axis=0)
        magnitude += float(np.sum(np.abs(shaped * values)))
        total = block if total is None else total + block
    return total, magnitude


def _difference(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _integrate_analytic(
    u: BaseField, x: np.ndarray, breakpoints: Sequence[float], integrand: Integrand, settings: QuadratureConfig
) -> Estimate:
    rule = build_ball_rule(u, x, breakpoints, settings)
    value, magnitude = _accumulate(u, rule, integrand, settings.chunk_nodes)
    if not settings.estimate_tolerance:
        return Estimate(value, 0.0, rule.name, rule.node_count, 0, magnitude)

    fine_settings = settings.refined()
    if settings.angular_order is None:
        order = settings.angular_order_for(u.n)
        fine_settings = fine_settings.model_copy(update={"angular_order": order + max(2, order // 2)})
    fine = build_ball_rule(u, x, breakpoints, fine_settings)
    fine_value, fine_magnitude = _accumulate(u, fine, integrand, settings.chunk_nodes)
    return Estimate(
        fine_value, _difference(fine_value, value), rule.name,
        rule.node_count + fine.node_count, 0, fine_magnitude,
    )


def _integrate_grid(
    u: GridField, x: np.ndarray, radius: float, integrand: Integrand, settings: QuadratureConfig
) -> Estimate:
    idx, centres = u.cells_in_ball(x, radius)
    capped = u.capped_mask[tuple(idx.T)] if idx.size else np.zeros(0, dtype=bool)
    skipped = 0
    if settings.skip_capped and np.any(capped):
        skipped = int(np.count_nonzero(capped))
        idx, centres = idx[~capped], centres[~capped]
        logger.debug(f"Skipped {skipped} capped cells in grid quadrature")
    if idx.shape[0] < settings.min_ball_cells:
        raise BallTooSmall(int(idx.shape[0]), settings.min_ball_cells)

    key = tuple(idx.T)
    sample = FieldSample(centres, centres - x, u.cell_values[key], u.cell_gradients[key])
    values = np.asarray(integrand(sample), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFiniteIntegrand(f"{int(np.count_nonzero(~np.isfinite(values)))} non-finite grid samples")

    cell = u.spacing ** u.n
    value = cell * np.sum(values, axis=0)
    coarse_mask = np.all(idx % 2 == 0, axis=1)
    coarse = (2.0 ** u.n) * cell * np.sum(values[coarse_mask], axis=0)
    magnitude = cell * float(np.sum(np.abs(values)))
    return Estimate(value, _difference(value, coarse), "midpoint", int(idx.shape[0]), skipped, magnitude)


def integrate_ball(
    u: BaseField,
    x,
    breakpoints: Sequence[float],
    integrand: Integrand,
    settings: Optional[QuadratureConfig] = None,
) -> Estimate:
    """
    Integrate a field-dependent integrand over B_R(x), R = max(breakpoints).

    Args:
        u: Field
        x: Ball centre
        breakpoints: Radii where the integrand changes smoothness; the
            largest is the integration radius
        integrand: Function of a FieldSample returning (M,) or (M, ...) values
        settings: Quadrature settings (global settings by default)

    Returns:
        Estimate with the refined value and |I_N - I_2N| tolerance
    """
    settings = settings or quadrature_settings()
    x = np.asarray(x, dtype=float).reshape(u.n)
    radius = max(breakpoints)
    if isinstance(u, GridField):
        return _integrate_grid(u, x, radius, integrand, settings)
    return _integrate_analytic(u, x, breakpoints, integrand, settings)
