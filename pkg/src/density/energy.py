"""
Scale-normalized energy densities and the quantities built from them.

Every quantity has an ``*_estimate`` form returning an Estimate (value plus
quadrature tolerance) and a float form. Power-law fields probed on their
singular plane use exact closed forms; everything else goes through
integrate_ball.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.special import beta as beta_fn

from ..core.config import QuadratureConfig, quadrature_settings
from ..core.exceptions import ValidationError
from ..core.workers import parallel_map
from ..fields import BaseField, PowerLawField
from .cutoff import PHI, PLATEAU_END, SUPPORT_END
from .quadrature import Estimate, FieldSample, integrate_ball, sphere_area

logger = logging.getLogger(__name__)

CLOSED_FORM = "closed_form"


def _check_scale(r: float, name: str = "r") -> float:
    if not (r > 0 and math.isfinite(r)):
        raise ValidationError(name, str(r), "a positive finite scale")
    return float(r)


def _centered_power_law(u: BaseField, x: np.ndarray, r: float) -> bool:
    """True when u is a power law and x lies on its singular plane."""
    if not isinstance(u, PowerLawField):
        return False
    return float(u.singular_distance(x)[0]) <= 1e-12 * max(1.0, r)


def sphere_power_average(n: int, m: int, beta: float) -> float:
    """∫_{S^{n-1}} |Pω|^{-beta} dω for P the projection killing an m-plane."""
    area = sphere_area(n)
    if m == 0:
        return area
    return area * beta_fn((n - m - beta) / 2.0, m / 2.0) / beta_fn((n - m) / 2.0, m / 2.0)


def _energy_weights(u: BaseField):
    p = u.params.p
    return (p - 1.0) / 2.0, (p - 1.0) / (p + 1.0)


# Classical density

def theta_closed_form(u: PowerLawField) -> float:
    """θ_r(u, x) for x on the singular plane; independent of r."""
    params = u.params
    a, b = _energy_weights(u)
    alpha, alpha_p = params.alpha, params.alpha_p
    strength = a * alpha ** 2 * u.c0 ** 2 + b * abs(u.c0) ** (params.p + 1.0)
    return strength * sphere_power_average(u.n, u.m, alpha_p) / (u.n - alpha_p)


def theta_estimate(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> Estimate:
    """
    r^{alpha_p - n} ∫_{B_r(x)} ((p-1)/2 |∇u|² + (p-1)/(p+1) |u|^{p+1}).

    Raises:
        OutOfDomain: B_r(x) leaves the field's domain
    """
    r = _check_scale(r)
    x = np.asarray(x, dtype=float).reshape(u.n)
    u.require_ball(x, r)
    if _centered_power_law(u, x, r):
        return Estimate(theta_closed_form(u), 0.0, CLOSED_FORM)

    a, b = _energy_weights(u)
    p = u.params.p

    def integrand(sample: FieldSample) -> np.ndarray:
        grad_sq = np.einsum("ij,ij->i", sample.grad, sample.grad)
        return a * grad_sq + b * np.abs(sample.u) ** (p + 1.0)

    return integrate_ball(u, x, [r], integrand, settings).scaled(r ** u.params.scaling_gap)


def theta(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> float:
    return float(theta_estimate(u, x, r, settings).value)


# Cutoff density

def vartheta_closed_form(u: PowerLawField) -> float:
    """ϑ_r(u, x) for x on the singular plane; independent of r."""
    params = u.params
    n, p, alpha, alpha_p = u.n, params.p, params.alpha, params.alpha_p
    c0 = u.c0
    bulk = (alpha ** 2 * c0 ** 2 / 2.0 - abs(c0) ** (p + 1.0) / (p + 1.0)) * sphere_power_average(n, u.m, alpha_p)
    bulk *= 0.5 * PHI.moment((n - 2.0 - alpha_p) / 2.0)
    boundary = alpha * c0 ** 2 * sphere_power_average(n, u.m, 2.0 * alpha)
    boundary *= 0.5 * PHI.derivative_moment((n - 2.0 - 2.0 * alpha) / 2.0)
    return bulk - boundary


def _cutoff_breakpoints(r: float) -> List[float]:
    return [math.sqrt(PLATEAU_END) * r, math.sqrt(SUPPORT_END) * r]


def vartheta_estimate(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> Estimate:
    """
    The cutoff density

        r^{alpha_p-n} ∫ (|∇u|²/2 - |u|^{p+1}/(p+1)) φ(|y-x|²/r²)
          - 2 r^{alpha_p-n-2}/(p-1) ∫ u² φ'(|y-x|²/r²)

    Raises:
        OutOfDomain: B_{10r}(x) leaves the field's domain
    """
    r = _check_scale(r)
    x = np.asarray(x, dtype=float).reshape(u.n)
    u.require_ball(x, 10.0 * r)
    if _centered_power_law(u, x, r):
        return Estimate(vartheta_closed_form(u), 0.0, CLOSED_FORM)

    p = u.params.p
    inv_r2 = 1.0 / (r * r)

    def integrand(sample: FieldSample) -> np.ndarray:
        t = sample.sq_dist * inv_r2
        grad_sq = np.einsum("ij,ij->i", sample.grad, sample.grad)
        energy = 0.5 * grad_sq - np.abs(sample.u) ** (p + 1.0) / (p + 1.0)
        return energy * PHI.phi(t) - (2.0 / (p - 1.0)) * inv_r2 * sample.u ** 2 * PHI.phi_prime(t)

    return integrate_ball(u, x, _cutoff_breakpoints(r), integrand, settings).scaled(r ** u.params.scaling_gap)


def vartheta(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> float:
    return float(vartheta_estimate(u, x, r, settings).value)


def vartheta_alternate_estimate(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> Estimate:
    """
    ϑ_r through its stationary form

        r^{alpha_p-n}/(p+3) ∫ ((p-1)/2 |∇u|² + (p-1)/(p+1) |u|^{p+1}) φ
          - 2/(p+3) d/dr (r^{alpha_p-n-1} ∫ u² φ')

    with the r-derivative expanded through φ''. Agrees with vartheta exactly
    when u is stationary.
    """
    r = _check_scale(r)
    x = np.asarray(x, dtype=float).reshape(u.n)
    u.require_ball(x, 10.0 * r)
    params = u.params
    p, gap = params.p, params.scaling_gap
    a, b = _energy_weights(u)
    inv_r2 = 1.0 / (r * r)

    def integrand(sample: FieldSample) -> np.ndarray:
        t = sample.sq_dist * inv_r2
        grad_sq = np.einsum("ij,ij->i", sample.grad, sample.grad)
        energy = (a * grad_sq + b * np.abs(sample.u) ** (p + 1.0)) * PHI.phi(t) / (p + 3.0)
        u_sq = sample.u ** 2
        derivative = (gap - 1.0) * u_sq * PHI.phi_prime(t) - 2.0 * u_sq * t * PHI.phi_second(t)
        return energy - (2.0 / (p + 3.0)) * inv_r2 * derivative

    return integrate_ball(u, x, _cutoff_breakpoints(r), integrand, settings).scaled(r ** gap)


def vartheta_alternate(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> float:
    return float(vartheta_alternate_estimate(u, x, r, settings).value)


def vartheta_derivative_estimate(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> Estimate:
    """
    -2 r^{alpha_p-n-3} ∫ |(y-x)·∇u + alpha u|² φ'(|y-x|²/r²), nonnegative.

    For stationary fields this is d/dr ϑ_r(u, x).
    """
    r = _check_scale(r)
    x = np.asarray(x, dtype=float).reshape(u.n)
    u.require_ball(x, 10.0 * r)
    if _centered_power_law(u, x, r):
        return Estimate(0.0, 0.0, CLOSED_FORM)

    alpha = u.params.alpha
    inv_r2 = 1.0 / (r * r)

    def integrand(sample: FieldSample) -> np.ndarray:
        radial = np.einsum("ij,ij->i", sample.offsets, sample.grad) + alpha * sample.u
        return -2.0 * radial ** 2 * PHI.phi_prime(sample.sq_dist * inv_r2)

    estimate = integrate_ball(u, x, _cutoff_breakpoints(r), integrand, settings)
    return estimate.scaled(r ** (u.params.scaling_gap - 3.0))


def vartheta_derivative(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> float:
    return float(vartheta_derivative_estimate(u, x, r, settings).value)


# Monotonicity gap and deficits

def density_gap_estimate(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> Estimate:
    """
    W_r(u, x) = ϑ_{2r} - ϑ_r with the tolerances of both terms added.

    Raises:
        OutOfDomain: B_{20r}(x) leaves the field's domain
    """
    r = _check_scale(r)
    x = np.asarray(x, dtype=float).reshape(u.n)
    u.require_ball(x, 20.0 * r)
    if _centered_power_law(u, x, r):
        return Estimate(0.0, 0.0, CLOSED_FORM)
    return vartheta_estimate(u, x, 2.0 * r, settings).combine(vartheta_estimate(u, x, r, settings), sign=-1.0)


def density_gap(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> float:
    return float(density_gap_estimate(u, x, r, settings).value)


def radial_deficit_estimate(u: BaseField, x, s: float, settings: Optional[QuadratureConfig] = None) -> Estimate:
    """
    s^{alpha_p-n-2} ∫_{B_{8s}(x)} |(y-x)·∇u + 2u/(p-1)|², the 0-symmetry deficit at x.

    Raises:
        OutOfDomain: B_{8s}(x) leaves the field's domain
    """
    s = _check_scale(s, "s")
    x = np.asarray(x, dtype=float).reshape(u.n)
    u.require_ball(x, 8.0 * s)
    if _centered_power_law(u, x, s):
        return Estimate(0.0, 0.0, CLOSED_FORM)

    alpha = u.params.alpha

    def integrand(sample: FieldSample) -> np.ndarray:
        radial = np.einsum("ij,ij->i", sample.offsets, sample.grad) + alpha * sample.u
        return radial ** 2

    estimate = integrate_ball(u, x, [8.0 * s], integrand, settings)
    return estimate.scaled(s ** (u.params.scaling_gap - 2.0))


def radial_deficit(u: BaseField, x, s: float, settings: Optional[QuadratureConfig] = None) -> float:
    return float(radial_deficit_estimate(u, x, s, settings).value)


def gradient_moment_closed_form(u: PowerLawField) -> np.ndarray:
    """r^{alpha_p-n} ∫_{B_r(x)} ∇u ⊗ ∇u for x on the singular plane."""
    params = u.params
    alpha, alpha_p = params.alpha, params.alpha_p
    scale = alpha ** 2 * u.c0 ** 2 * sphere_power_average(u.n, u.m, alpha_p)
    return scale / ((u.n - alpha_p) * (u.n - u.m)) * u.projector


def gradient_moment_estimate(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> Estimate:
    """
    The scaled gradient second moment r^{alpha_p-n} ∫_{B_r(x)} ∇u ⊗ ∇u, an (n, n) matrix.

    Its quadratic form at a unit vector v is the directional energy of u
    along v, so small eigenvalues mark approximate invariant directions.
    """
    r = _check_scale(r)
    x = np.asarray(x, dtype=float).reshape(u.n)
    u.require_ball(x, r)
    if _centered_power_law(u, x, r):
        return Estimate(gradient_moment_closed_form(u), 0.0, CLOSED_FORM)

    def integrand(sample: FieldSample) -> np.ndarray:
        return np.einsum("ij,ik->ijk", sample.grad, sample.grad)

    return integrate_ball(u, x, [r], integrand, settings).scaled(r ** u.params.scaling_gap)


def gradient_moment(u: BaseField, x, r: float, settings: Optional[QuadratureConfig] = None) -> np.ndarray:
    return np.asarray(gradient_moment_estimate(u, x, r, settings).value)


# Scans and fitted constants

@dataclass
class DensityScan:
    """Densities at one centre over increasing radii."""
    center: List[float]
    radii: List[float]
    theta: List[float]
    vartheta: List[float]
    gaps: List[Optional[float]]
    tolerances: List[float]
    rules: List[str] = field(default_factory=list)
    nodes: int = 0
    skipped_cells: int = 0

    def violations(self) -> List[int]:
        """Indices i where ϑ drops from r_i to r_{i+1} by more than the tolerances."""
        bad = []
        for i in range(len(self.radii) - 1):
            allowed = self.tolerances[i] + self.tolerances[i + 1]
            if self.vartheta[i + 1] - self.vartheta[i] < -allowed:
                bad.append(i)
        return bad

    @property
    def monotone(self) -> bool:
        return not self.violations()

    def csv_rows(self) -> List[List[Any]]:
        header = ["r", "theta", "vartheta", "W", "tol"]
        rows = [header]
        for r, th, vt, w, tol in zip(self.radii, self.theta, self.vartheta, self.gaps, self.tolerances):
            rows.append([r, th, vt, "" if w is None else w, tol])
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            "center": self.center,
            "radii": self.radii,
            "theta": self.theta,
            "vartheta": self.vartheta,
            "W": self.gaps,
            "tolerance": self.tolerances,
            "rules": self.rules,
            "nodes": self.nodes,
            "skipped_cells": self.skipped_cells,
            "monotone": self.monotone,
            "violations": self.violations(),
        }


def density_scan(
    u: BaseField,
    x,
    radii: Sequence[float],
    settings: Optional[QuadratureConfig] = None,
) -> DensityScan:
    """
    θ, ϑ and W at x for each radius (sorted ascending), evaluated in parallel.

    W is left empty where B_{20r}(x) leaves the domain; θ and ϑ still
    require their own balls.
    """
    radii = sorted(_check_scale(r) for r in radii)
    if not radii:
        raise ValidationError("radii", "[]", "at least one radius")
    x = np.asarray(x, dtype=float).reshape(u.n)

    def evaluate(r: float):
        th = theta_estimate(u, x, r, settings)
        vt = vartheta_estimate(u, x, r, settings)
        gap = None
        if u.contains_ball(x, 20.0 * r):
            gap = density_gap_estimate(u, x, r, settings)
        return th, vt, gap

    results = parallel_map(evaluate, radii)
    scan = DensityScan(
        center=x.tolist(),
        radii=list(radii),
        theta=[float(th.value) for th, _, _ in results],
        vartheta=[float(vt.value) for _, vt, _ in results],
        gaps=[None if gap is None else float(gap.value) for _, _, gap in results],
        tolerances=[float(vt.tolerance) + (0.0 if gap is None else float(gap.tolerance)) for _, vt, gap in results],
        rules=[vt.rule for _, vt, _ in results],
        nodes=sum(th.nodes + vt.nodes + (gap.nodes if gap else 0) for th, vt, gap in results),
        skipped_cells=max((vt.skipped_cells for _, vt, _ in results), default=0),
    )
    skipped_gaps = sum(1 for gap in scan.gaps if gap is None)
    if skipped_gaps:
        logger.warning(f"Density gap skipped at {skipped_gaps} radii whose 20r ball leaves the domain")
    if not scan.monotone:
        logger.warning(f"Cutoff density decreases beyond tolerance at radius indices {scan.violations()}")
    return scan


@dataclass
class ConstantFit:
    """An empirically fitted constant with the ratios it was fitted on."""
    name: str
    value: float
    samples: int
    ratios: List[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "samples": self.samples,
            "min_ratio": min(self.ratios) if self.ratios else None,
            "max_ratio": max(self.ratios) if self.ratios else None,
        }


def fit_nondegeneracy_constant(
    u: BaseField,
    probes: Sequence[Sequence[float]],
    settings: Optional[QuadratureConfig] = None,
) -> ConstantFit:
    """
    Smallest C with θ_{4ρ}(u, x) ≤ C ϑ_ρ(u, x) over (x, ρ) probes.

    Probes are rows (x_1, ..., x_n, ρ); probes whose ϑ is within tolerance
    of zero are left out.
    """

    def ratio(probe) -> Optional[float]:
        probe = np.asarray(probe, dtype=float)
        x, rho = probe[:-1], float(probe[-1])
        vt = vartheta_estimate(u, x, rho, settings)
        if vt.value <= max(vt.tolerance, 1e-14):
            return None
        return theta(u, x, 4.0 * rho, settings) / float(vt.value)

    ratios = [value for value in parallel_map(ratio, probes) if value is not None]
    if not ratios:
        raise ValidationError("probes", f"{len(probes)} probes", "at least one probe with positive vartheta")
    return ConstantFit("nondegeneracy", max(ratios), len(ratios), ratios)


def fit_deficit_constant(
    u: BaseField,
    probes: Sequence[Sequence[float]],
    settings: Optional[QuadratureConfig] = None,
) -> ConstantFit:
    """
    Largest C with W_r(u, x) ≥ C · radial_deficit(u, x, r) over (x, r) probes.

    Probes whose deficit is within tolerance of zero are left out.
    """

    def ratio(probe) -> Optional[float]:
        probe = np.asarray(probe, dtype=float)
        x, r = probe[:-1], float(probe[-1])
        deficit = radial_deficit_estimate(u, x, r, settings)
        if deficit.value <= max(deficit.tolerance, 1e-14):
            return None
        return density_gap(u, x, r, settings) / float(deficit.value)

    ratios = [value for value in parallel_map(ratio, probes) if value is not None]
    if not ratios:
        raise ValidationError("probes", f"{len(probes)} probes", "at least one probe with a positive radial deficit")
    return ConstantFit("radial_deficit", min(ratios), len(ratios), ratios)
