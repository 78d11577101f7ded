"""
Tube volumes, Minkowski contents and weak-L^q tail fits.

Tube volumes L^n(B_r(S) ∩ box) are counted on voxels in dimensions up to 3
and estimated by multiplicity-weighted ball sampling above that. Tail
measures L^n({|D^j u| > λ} ∩ B) are integrated along the rays of a
spherical product rule for analytic fields and counted on cells for grids.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import KDTree

from ..core.config import QuadratureConfig, quadrature_settings
from ..core.exceptions import ResolutionTooCoarse, UnsupportedOrder, ValidationError
from ..core.sampling import halton_ball
from ..core.workers import parallel_map
from ..density import sphere_rule
from ..fields import BaseField, GridField
from .reifenberg import unit_ball_volume

logger = logging.getLogger(__name__)

VOXEL_DIMENSION_LIMIT = 3
DEFAULT_VOXELS_PER_R = 8
RAY_SAMPLES = 512
BISECTION_STEPS = 60
MIN_FIT_POINTS = 8


def _as_box(box, n: int) -> Tuple[np.ndarray, np.ndarray]:
    if box is None:
        return np.full(n, -np.inf), np.full(n, np.inf)
    lo, hi = (np.asarray(edge, dtype=float).reshape(n) for edge in box)
    if np.any(hi <= lo):
        raise ValidationError("box", f"{lo.tolist()} .. {hi.tolist()}", "lower corner strictly below upper corner")
    return lo, hi


def _voxel_count(points: np.ndarray, r: float, lo: np.ndarray, hi: np.ndarray, h: float) -> float:
    """Voxels of side h whose centre lies in B_r(S) ∩ box, swept in slabs along axis 0."""
    n = points.shape[1]
    start = np.maximum(lo, points.min(axis=0) - r)
    stop = np.minimum(hi, points.max(axis=0) + r)
    if np.any(stop <= start):
        return 0.0
    counts = np.ceil((stop - start) / h).astype(int)
    tree = KDTree(points)
    order = np.argsort(points[:, 0], kind="stable")
    sorted_x = points[order, 0]

    def slab(i: int) -> int:
        x = start[0] + (i + 0.5) * h
        if x > stop[0]:
            return 0
        near = order[np.searchsorted(sorted_x, x - r):np.searchsorted(sorted_x, x + r, side="right")]
        if near.size == 0:
            return 0
        sub_lo = np.maximum(start[1:], points[near, 1:].min(axis=0) - r)
        sub_hi = np.minimum(stop[1:], points[near, 1:].max(axis=0) + r)
        first = np.floor((sub_lo - start[1:]) / h).astype(int)
        last = np.ceil((sub_hi - start[1:]) / h).astype(int)
        axes = [start[d + 1] + (np.arange(first[d], min(last[d], counts[d + 1])) + 0.5) * h for d in range(n - 1)]
        mesh = np.meshgrid(*axes, indexing="ij")
        centres = np.column_stack([np.full(mesh[0].size, x)] + [m.ravel() for m in mesh]) if n > 1 else np.array([[x]])
        inside = np.all((centres >= lo) & (centres <= hi), axis=1)
        dist, _ = tree.query(centres[inside], distance_upper_bound=r)
        return int(np.count_nonzero(dist <= r))

    total = sum(parallel_map(slab, range(int(counts[0]))))
    return total * h ** n


def _multiplicity_estimate(points: np.ndarray, r: float, lo: np.ndarray, hi: np.ndarray, samples: int) -> float:
    """Σ_i ω_n r^n · mean over B_r(s_i) of 1/#{j : |y - s_j| ≤ r}, restricted to the box."""
    n = points.shape[1]
    tree = KDTree(points)
    unit = halton_ball(n, samples)

    def ball(center: np.ndarray) -> float:
        probes = center + r * unit
        inside = np.all((probes >= lo) & (probes <= hi), axis=1)
        if not np.any(inside):
            return 0.0
        multiplicity = tree.query_ball_point(probes[inside], r * (1.0 + 1e-12), return_length=True)
        return float(np.sum(1.0 / np.maximum(multiplicity, 1))) / samples

    fractions = parallel_map(ball, list(points))
    return unit_ball_volume(n) * r ** n * float(np.sum(fractions))


def tube_volume(
    S,
    r: float,
    box=None,
    voxels_per_r: int = DEFAULT_VOXELS_PER_R,
    voxel_size: Optional[float] = None,
) -> float:
    """
    L^n(B_r(S) ∩ box).

    Args:
        S: (N, n) point set (may be empty)
        r: Tube radius
        box: (lower, upper) corners; unbounded when None
        voxels_per_r: Resolution, at least 8 voxels per r
        voxel_size: Explicit voxel side; overrides voxels_per_r

    Raises:
        ResolutionTooCoarse: r is less than two voxels
    """
    if not r > 0:
        raise ValidationError("r", str(r), "a positive radius")
    points = np.asarray(S, dtype=float)
    if points.size == 0:
        return 0.0
    points = points.reshape(points.shape[0], -1)
    n = points.shape[1]
    h = voxel_size if voxel_size is not None else r / max(int(voxels_per_r), DEFAULT_VOXELS_PER_R)
    if not r > 2.0 * h:
        raise ResolutionTooCoarse(f"radius {r:.4g} spans fewer than two voxels of side {h:.4g}")
    lo, hi = _as_box(box, n)

    if n <= VOXEL_DIMENSION_LIMIT:
        volume = _voxel_count(points, r, lo, hi, h)
        method = "voxel"
    else:
        volume = _multiplicity_estimate(points, r, lo, hi, samples=int(math.ceil((r / h) ** n)))
        method = "ball-sampling"
    logger.debug(f"Tube volume of {points.shape[0]} points at r={r:.4g} ({method}): {volume:.6g}")
    return volume


def minkowski_content(S, r: float, k: int, box=None, **kwargs) -> float:
    """The k-dimensional Minkowski r-content (2r)^{k-n} L^n(B_r(S) ∩ box)."""
    points = np.asarray(S, dtype=float)
    if points.size == 0:
        return 0.0
    n = points.reshape(points.shape[0], -1).shape[1]
    if not 0 <= k <= n:
        raise ValidationError("k", str(k), f"0 <= k <= n={n}")
    return (2.0 * r) ** (k - n) * tube_volume(points, r, box, **kwargs)


def tail_exponent(n: int, alpha: float, j: int) -> float:
    """q_j = n/(alpha + j), the weak-L^q exponent of D^j of a point-singular power law."""
    return n / (alpha + j)


def _ray_measures(u: BaseField, j: int, lambdas: np.ndarray, center: np.ndarray, radius: float,
                  settings: QuadratureConfig) -> np.ndarray:
    """L^n({|D^j u| > λ} ∩ B_radius(center)) for every λ, by marching and bisecting along rays."""
    n = u.n
    directions, weights = sphere_rule(n, settings.angular_order_for(n), None)
    steps = radius * np.arange(1, RAY_SAMPLES + 1) / RAY_SAMPLES

    def norm_on(rho: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        points = center + rho[..., None] * dirs
        values = u.derivative_norm(points.reshape(-1, n), j)
        return values.reshape(rho.shape)

    grid = norm_on(np.broadcast_to(steps, (directions.shape[0], RAY_SAMPLES)), directions[:, None, :])

    def measure(lam: float) -> float:
        above = grid > lam
        contributions = np.zeros(directions.shape[0])
        flips = np.argwhere(above[:, 1:] != above[:, :-1])
        edges = {}
        if flips.size:
            ray, index = flips[:, 0], flips[:, 1]
            a, b = steps[index].copy(), steps[index + 1].copy()
            starts_above = above[ray, index]
            dirs = directions[ray]
            for _ in range(BISECTION_STEPS):
                mid = 0.5 * (a + b)
                mid_above = norm_on(mid, dirs) > lam
                same = mid_above == starts_above
                a = np.where(same, mid, a)
                b = np.where(same, b, mid)
            crossing = 0.5 * (a + b)
            for i in range(ray.size):
                edges.setdefault(int(ray[i]), []).append(float(crossing[i]))
        for ray_index in range(directions.shape[0]):
            # a superlevel set open at the first sample starts at the centre
            inside = bool(above[ray_index, 0])
            start = 0.0 if inside else None
            for crossing in edges.get(ray_index, []):
                if inside:
                    contributions[ray_index] += (crossing ** n - start ** n) / n
                else:
                    start = crossing
                inside = not inside
            if inside:
                contributions[ray_index] += (radius ** n - start ** n) / n
        return float(np.sum(weights * contributions))

    return np.asarray([measure(float(lam)) for lam in lambdas])


def _cell_measures(u: GridField, j: int, lambdas: np.ndarray, center: np.ndarray, radius: float,
                   settings: QuadratureConfig) -> np.ndarray:
    """Cell counts of {|D^j u| > λ} inside the ball; capped cells count as above every level."""
    if j not in (0, 1):
        raise UnsupportedOrder(j, "grid")
    u.require_ball(center, radius)
    idx, _ = u.cells_in_ball(center, radius)
    if idx.shape[0] < settings.min_ball_cells:
        raise ResolutionTooCoarse(f"{idx.shape[0]} cells inside the ball, need {settings.min_ball_cells}")
    cells = tuple(idx.T)
    if j == 0:
        norms = np.abs(u.cell_values[cells])
    else:
        norms = np.linalg.norm(u.cell_gradients[cells], axis=-1)
    norms = np.where(u.capped_mask[cells], np.inf, norms)
    volume = u.spacing ** u.n
    return np.asarray([np.count_nonzero(norms > lam) * volume for lam in lambdas])


@dataclass
class TailFit:
    """Superlevel measures of |D^j u| and their fitted log-log slope."""
    j: int
    lambdas: List[float]
    measures: List[float]
    slope: Optional[float]
    intercept: Optional[float]
    residual: Optional[float]
    fit_points: int
    expected_exponent: float
    method: str

    @property
    def q_hat(self) -> Optional[float]:
        """Fitted weak-L^q exponent (minus the slope)."""
        return None if self.slope is None else -self.slope

    def to_dict(self) -> Dict[str, Any]:
        return {
            "j": self.j,
            "lambdas": self.lambdas,
            "measures": self.measures,
            "fitted_exponent": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "fit_points": self.fit_points,
            "q_hat": self.q_hat,
            "q_expected": self.expected_exponent,
            "method": self.method,
        }

    def csv_rows(self) -> List[List[Any]]:
        return [["lambda", "measure"]] + [[lam, mass] for lam, mass in zip(self.lambdas, self.measures)]


def _fit_slope(lambdas: np.ndarray, measures: np.ndarray) -> Tuple[Optional[float], Optional[float], Optional[float], int]:
    count = max(MIN_FIT_POINTS, int(math.ceil(len(lambdas) / 2)))
    lam, mass = lambdas[-count:], measures[-count:]
    keep = mass > 0
    if np.count_nonzero(keep) < 2:
        return None, None, None, int(np.count_nonzero(keep))
    x, y = np.log(lam[keep]), np.log(mass[keep])
    (slope, intercept), residuals, _, _, _ = np.polyfit(x, y, 1, full=True)
    residual = float(np.sqrt(residuals[0] / x.size)) if residuals.size else 0.0
    return float(slope), float(intercept), residual, int(x.size)


def tail_distribution(
    u: BaseField,
    j: int,
    lambda_grid: Sequence[float],
    center=None,
    radius: float = 1.0,
    settings: Optional[QuadratureConfig] = None,
) -> TailFit:
    """
    Superlevel measures L^n({x ∈ B_radius(center): |D^j u(x)| > λ}) and the
    least-squares log-log slope over the upper half of the λ grid.

    Args:
        u: Field
        j: Derivative order (0 or 1 for grid fields)
        lambda_grid: Increasing positive levels, at least 8
        center: Ball centre (origin by default)
        radius: Ball radius
        settings: Quadrature settings (angular order of the ray rule)

    Raises:
        UnsupportedOrder: j >= 2 on a grid field
        ResolutionTooCoarse: the grid has too few cells in the ball
    """
    settings = settings or quadrature_settings()
    if j < 0:
        raise ValidationError("j", str(j), "a nonnegative derivative order")
    lambdas = np.asarray(lambda_grid, dtype=float).ravel()
    if lambdas.size < MIN_FIT_POINTS or np.any(lambdas <= 0) or np.any(np.diff(lambdas) <= 0):
        raise ValidationError("lambda_grid", f"{lambdas.size} levels", f"at least {MIN_FIT_POINTS} increasing positive levels")
    center = np.zeros(u.n) if center is None else np.asarray(center, dtype=float).reshape(u.n)

    if isinstance(u, GridField):
        measures = _cell_measures(u, j, lambdas, center, radius, settings)
        method = "cells"
    else:
        measures = _ray_measures(u, j, lambdas, center, radius, settings)
        method = "rays"
    slope, intercept, residual, used = _fit_slope(lambdas, measures)
    fit = TailFit(
        j=j,
        lambdas=lambdas.tolist(),
        measures=[float(v) for v in measures],
        slope=slope,
        intercept=intercept,
        residual=residual,
        fit_points=used,
        expected_exponent=tail_exponent(u.n, u.params.alpha, j),
        method=method,
    )
    logger.info(f"Tail fit j={j}: slope {slope} over {used} levels (expected -{fit.expected_exponent:.4g})")
    return fit
