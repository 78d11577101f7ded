"""
Quantitative symmetry deficits and the two-condition symmetry test.

A field is (k, ε)-symmetric in B_r(x) when its cutoff density barely
changes between r and 2r and some k-frame V has small directional energy
r^{alpha_p-n} ∫_{B_r(x)} |V·∇u|². The minimizing frame comes from the
eigen-decomposition of the scaled gradient second moment.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..core.config import QuadratureConfig
from ..core.exceptions import BadFrame, ValidationError
from ..density import DensityEvaluator, density_gap_estimate, gradient_moment_estimate, radial_deficit_estimate
from ..fields import BaseField
from ..subspace import AffineSubspace, jacobi_eigh

logger = logging.getLogger(__name__)

HOMOGENEITY_MODES = ("gap", "radial")


def _as_frame(V, n: int) -> np.ndarray:
    frame = np.asarray(V, dtype=float).reshape(-1, n)
    if frame.shape[0]:
        error = float(np.max(np.abs(frame @ frame.T - np.eye(frame.shape[0]))))
        if error > 1e-10:
            raise BadFrame("invariance frame rows are not orthonormal", technical_details=f"max |V V^T - I| = {error:.3e}")
    return frame


def _moment(u: BaseField, x: np.ndarray, r: float, evaluator: Optional[DensityEvaluator],
            settings: Optional[QuadratureConfig]) -> Tuple[np.ndarray, float]:
    if evaluator is not None:
        return evaluator.gradient_moment(x, r), 0.0
    estimate = gradient_moment_estimate(u, x, r, settings)
    return np.asarray(estimate.value), float(estimate.tolerance)


def invariance_deficit(
    u: BaseField,
    V,
    x,
    r: float,
    settings: Optional[QuadratureConfig] = None,
    evaluator: Optional[DensityEvaluator] = None,
) -> float:
    """
    r^{alpha_p-n} ∫_{B_r(x)} Σ_i |v_i·∇u|² for the orthonormal rows v_i of V.

    Raises:
        OutOfDomain: B_r(x) leaves the field's domain
        BadFrame: V is not orthonormal
    """
    x = np.asarray(x, dtype=float).reshape(u.n)
    frame = _as_frame(V, u.n)
    moment, _ = _moment(u, x, r, evaluator, settings)
    return float(np.einsum("ij,jk,ik->", frame, moment, frame))


def min_invariance_deficit(
    u: BaseField,
    x,
    r: float,
    k: int,
    settings: Optional[QuadratureConfig] = None,
    evaluator: Optional[DensityEvaluator] = None,
) -> Tuple[float, np.ndarray]:
    """
    Minimum of invariance_deficit over k-frames: the sum of the k smallest
    eigenvalues of the scaled gradient moment, with their eigenvectors as rows.

    Raises:
        OutOfDomain: B_r(x) leaves the field's domain
    """
    if not 0 <= k <= u.n:
        raise ValidationError("k", str(k), f"0 <= k <= n={u.n}")
    x = np.asarray(x, dtype=float).reshape(u.n)
    moment, _ = _moment(u, x, r, evaluator, settings)
    eigenvalues, eigenvectors, _ = jacobi_eigh(moment)
    if k == 0:
        return 0.0, np.zeros((0, u.n))
    return float(np.sum(eigenvalues[-k:])), eigenvectors[:, -k:][:, ::-1].T


@dataclass
class SymmetryProbe:
    """One (x, r, k) symmetry test with both deficits."""
    x: np.ndarray
    r: float
    k: int
    homogeneity_deficit: float
    invariance_deficit: float
    best_frame: AffineSubspace
    verdict: bool
    eps: float
    tolerance: float = 0.0
    mode: str = "gap"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": np.asarray(self.x).tolist(),
            "r": self.r,
            "k": self.k,
            "homogeneity_deficit": self.homogeneity_deficit,
            "invariance_deficit": self.invariance_deficit,
            "best_frame": self.best_frame.frame.tolist(),
            "verdict": self.verdict,
            "eps": self.eps,
            "tolerance": self.tolerance,
            "mode": self.mode,
        }


def hsv_symmetric(
    u: BaseField,
    x,
    r: float,
    k: int,
    eps: float,
    mode: str = "gap",
    settings: Optional[QuadratureConfig] = None,
    evaluator: Optional[DensityEvaluator] = None,
) -> SymmetryProbe:
    """
    The two-condition (k, eps) symmetry test in B_r(x).

    ``mode`` picks the homogeneity deficit: the density gap ϑ_{2r} - ϑ_r
    ("gap") or the radial deficit ("radial").

    Raises:
        OutOfDomain: B_{20r}(x) leaves the field's domain
    """
    if mode not in HOMOGENEITY_MODES:
        raise ValidationError("mode", mode, f"one of {HOMOGENEITY_MODES}")
    if not eps > 0:
        raise ValidationError("eps", str(eps), "a positive threshold")
    x = np.asarray(x, dtype=float).reshape(u.n)
    u.require_ball(x, 20.0 * r)

    tolerance = 0.0
    if mode == "radial":
        estimate = radial_deficit_estimate(u, x, r, settings)
        homogeneity, tolerance = float(estimate.value), float(estimate.tolerance)
    elif evaluator is not None:
        homogeneity = evaluator.density_gap(x, r)
    else:
        estimate = density_gap_estimate(u, x, r, settings)
        homogeneity, tolerance = float(estimate.value), float(estimate.tolerance)

    invariance, frame = min_invariance_deficit(u, x, r, k, settings, evaluator)
    verdict = homogeneity < eps and invariance < eps
    logger.debug(f"Symmetry probe k={k} r={r:.4g}: homogeneity={homogeneity:.4g} invariance={invariance:.4g} -> {verdict}")
    return SymmetryProbe(
        x=x, r=float(r), k=k,
        homogeneity_deficit=homogeneity,
        invariance_deficit=invariance,
        best_frame=AffineSubspace(x, frame),
        verdict=bool(verdict),
        eps=float(eps),
        tolerance=tolerance,
        mode=mode,
    )
