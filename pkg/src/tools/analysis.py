"""
Analysis command handlers.

Each handler takes the validated RunConfig of one invocation, runs the
library operation, writes its artifacts to the output directory and
returns a ``{"success": True, ...}`` dictionary. Toolkit exceptions are
left to propagate to the command line layer.
"""

import logging
from typing import Any, Dict, Optional

import numpy as np

from ..core.config import CoverConfig, QuadratureConfig, RunConfig, cover_settings, quadrature_settings
from ..core.exceptions import ValidationError
from ..core.sampling import halton_ball
from ..covering import build_cover, reifenberg_check, tail_distribution
from ..density import density_scan
from ..subspace import displacement, displacement_bruteforce, measure_from_file_data, moment_spectrum
from ..symmetry import classify_strata
from .reports import read_json, write_csv, write_json
from .synthesis import build_field

logger = logging.getLogger(__name__)

DEFAULT_SCAN_RADII = [0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.4]
TAIL_LEVELS = 16
TAIL_DECADES = 3.0


def quadrature_for(run: RunConfig) -> QuadratureConfig:
    """Quadrature settings with the run's node counts."""
    return quadrature_settings().model_copy(update={
        "radial_nodes": run.radial_nodes,
        "angular_order": run.angular_order,
    })


def cover_config_for(run: RunConfig) -> CoverConfig:
    """Covering settings with the run's rho and sample factor."""
    return cover_settings().model_copy(update={"rho": run.rho, "sample_factor": run.sample_factor})


def _point(run: RunConfig, n: int) -> np.ndarray:
    if run.x is None:
        return np.zeros(n)
    if len(run.x) != n:
        raise ValidationError("x", str(run.x), f"{n} coordinates")
    return np.asarray(run.x, dtype=float)


def run_density_scan(run: RunConfig) -> Dict[str, Any]:
    """θ, ϑ and W at x over the run's radii; writes density_scan.csv."""
    u = build_field(run)
    scan = density_scan(u, _point(run, u.n), run.radii or DEFAULT_SCAN_RADII, quadrature_for(run))
    path = write_csv(run.out, "density_scan.csv", scan.csv_rows())
    return {"success": True, "scan": scan.to_dict(), "artifacts": [path]}


def run_strata(run: RunConfig) -> Dict[str, Any]:
    """Stratum classification of Halton points of B_R(x); writes strata.csv."""
    u = build_field(run)
    points = halton_ball(u.n, run.samples, _point(run, u.n), run.R)
    report = classify_strata(u, points, run.eps, run.r_min, settings=quadrature_for(run))
    path = write_csv(run.out, "strata.csv", report.csv_rows())
    return {"success": True, "strata": report.to_dict(), "artifacts": [path]}


def _measure(run: RunConfig, n: Optional[int] = None):
    if not run.measure:
        raise ValidationError("measure", "missing", "a measure JSON file ({'points': ..., 'weights': ...})")
    return measure_from_file_data(read_json(run.measure, "measure"), n)


def run_fit_plane(run: RunConfig) -> Dict[str, Any]:
    """Displacement D^k_μ(x, R), its minimizing k-plane and a sampled cross-check seeded by ``seed``."""
    mu = _measure(run)
    x = _point(run, mu.n)
    value, plane = displacement(mu, x, run.R, run.k)
    spectrum = moment_spectrum(mu, x, run.R)
    sampled = displacement_bruteforce(mu, x, run.R, run.k, seed=run.seed)
    if sampled < value * (1.0 - 1e-9):
        logger.warning(f"Sampled k-planes beat the spectral fit: {sampled:.6g} < {value:.6g}")
    return {
        "success": True,
        "displacement": value,
        "subspace": plane.to_dict(),
        "spectrum": spectrum.to_dict(),
        "bruteforce": {"seed": run.seed, "value": sampled},
    }


def run_reifenberg(run: RunConfig) -> Dict[str, Any]:
    """Reifenberg hypothesis integrals and packing ratio of a ball-centre measure in B_R(x)."""
    mu = _measure(run)
    radii = None
    if run.radii_file:
        data = read_json(run.radii_file, "radii_file")
        radii = data["radii"] if isinstance(data, dict) else data
    report = reifenberg_check(mu, run.k, _point(run, mu.n), run.R, radii=radii, delta=run.delta)
    return {"success": True, "packing": report.to_dict()}


def run_cover(run: RunConfig) -> Dict[str, Any]:
    """The good/bad-ball cover of the k-th stratum in B_R(x) down to radius r; writes cover_tree.json."""
    u = build_field(run)
    tree = build_cover(
        u, run.k, run.eps, run.r, run.R,
        rho=run.rho, delta=run.delta, xi=run.xi, x0=_point(run, u.n),
        stratum_samples=run.samples,
        settings=quadrature_for(run),
        cover_config=cover_config_for(run),
    )
    path = write_json(run.out, "cover_tree.json", tree.to_dict())
    return {
        "success": True,
        "leaf_count": len(tree.leaves),
        "leaf_tally": tree.leaf_tally,
        "packing_ratio": tree.packing_ratio,
        "leaf_labels": tree.label_counts(),
        "pinch_violations": tree.pinch_violations,
        "stratum_points": int(tree.stratum_points.shape[0]),
        "artifacts": [path],
    }


def default_levels(u, j: int, center: np.ndarray, radius: float) -> list:
    """Levels starting at twice the largest |D^j u| on the boundary sphere, over three decades."""
    directions = halton_ball(u.n, 512)
    directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    edge = float(np.max(u.derivative_norm(center + radius * directions, j)))
    if not np.isfinite(edge) or edge <= 0:
        raise ValidationError("lambdas", "missing", "an explicit increasing level grid for this field")
    return np.geomspace(2.0 * edge, 2.0 * edge * 10.0 ** TAIL_DECADES, TAIL_LEVELS).tolist()


def run_tail(run: RunConfig) -> Dict[str, Any]:
    """Superlevel measures of |D^j u| in B_R(x) and the fitted exponent; writes tail.csv."""
    u = build_field(run)
    center = _point(run, u.n)
    levels = run.lambdas or default_levels(u, run.j, center, run.R)
    fit = tail_distribution(u, run.j, levels, center=center, radius=run.R, settings=quadrature_for(run))
    path = write_csv(run.out, "tail.csv", fit.csv_rows())
    return {"success": True, "tail": fit.to_dict(), "artifacts": [path]}
