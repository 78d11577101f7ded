"""
Discrete Reifenberg checks on ball-centre measures.

A measure μ = Σ ω_k r_y^k δ_y over the centres of pairwise disjoint balls is
tested two ways: the hypothesis integral
∫_{B_t(y)} ∫_0^t D^k_μ(z, s) ds/s dμ(z) against t^k over dyadic t < r/10,
and the packing ratio μ(B_r(x0))/r^k. The inner ds/s integral is a dyadic
sum Σ_l D^k_μ(z, t 2^{-l}) ln 2.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial import KDTree
from scipy.special import gamma as gamma_fn

from ..core.config import QuadratureConfig
from ..core.exceptions import EmptyRestriction, OverlappingBalls, ValidationError
from ..core.workers import parallel_map
from ..density import DensityEvaluator
from ..fields import BaseField
from ..subspace import DiscreteMeasure, displacement
from ..symmetry import min_invariance_deficit

logger = logging.getLogger(__name__)

MIN_LEVELS = 8


def unit_ball_volume(k: int) -> float:
    """ω_k, the volume of the unit k-ball."""
    return math.pi ** (k / 2.0) / gamma_fn(k / 2.0 + 1.0)


def radii_from_weights(mu: DiscreteMeasure, k: int) -> np.ndarray:
    """r_y = (w_y / ω_k)^{1/k}; k = 0 carries no radius information."""
    if k == 0:
        return np.zeros(len(mu))
    return (mu.weights / unit_ball_volume(k)) ** (1.0 / k)


def check_disjoint(centers: np.ndarray, radii: np.ndarray, tol: float = 1e-12) -> None:
    """
    Raise OverlappingBalls for the first pair (lowest indices) of overlapping balls.
    """
    if centers.shape[0] < 2 or not np.any(radii > 0):
        return
    tree = KDTree(centers)
    pairs = sorted(tree.query_pairs(2.0 * float(np.max(radii))))
    for i, j in pairs:
        gap = float(np.linalg.norm(centers[i] - centers[j]))
        if gap < (radii[i] + radii[j]) * (1.0 - tol):
            raise OverlappingBalls(i, j, technical_details=f"distance {gap:.6g} < {radii[i] + radii[j]:.6g}")


def ahlfors_ratios(mu: DiscreteMeasure, k: int, radii: Sequence[float], centers=None) -> Dict[str, float]:
    """Upper Ahlfors ratios max_y μ(B_t(y))/t^k over support points y, per radius t."""
    centers = mu.points if centers is None else np.asarray(centers, dtype=float).reshape(-1, mu.n)
    ratios = {}
    for t in radii:
        masses = [mu.mass_in_ball(y, t) for y in centers]
        ratios[repr(float(t))] = (max(masses) if masses else 0.0) / t ** k
    return ratios


@dataclass
class PackingReport:
    """Hypothesis integrals and packing ratios of one Reifenberg check."""
    k: int
    x0: List[float]
    r: float
    scales: List[float]
    hypothesis_ratios: List[float]
    packing_ratio: float
    packing_bound: float
    ahlfors: Dict[str, float] = field(default_factory=dict)
    delta: Optional[float] = None
    centers_checked: int = 0

    @property
    def hypothesis_max(self) -> float:
        return max(self.hypothesis_ratios) if self.hypothesis_ratios else 0.0

    @property
    def verdicts(self) -> Dict[str, Optional[bool]]:
        return {
            "hypothesis_small": None if self.delta is None else self.hypothesis_max < self.delta,
            "packing_bounded": self.packing_ratio <= self.packing_bound,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "x0": self.x0,
            "r": self.r,
            "scales": self.scales,
            "hypothesis_ratios": self.hypothesis_ratios,
            "hypothesis_max": self.hypothesis_max,
            "packing_ratio": self.packing_ratio,
            "packing_bound": self.packing_bound,
            "ahlfors_ratios": self.ahlfors,
            "delta": self.delta,
            "centers_checked": self.centers_checked,
            "verdicts": self.verdicts,
        }


def reifenberg_check(
    mu: DiscreteMeasure,
    k: int,
    x0,
    r: float,
    radii: Optional[Sequence[float]] = None,
    scale_count: int = 10,
    levels: int = MIN_LEVELS,
    delta: Optional[float] = None,
) -> PackingReport:
    """
    Evaluate the Reifenberg hypothesis integrals and the packing ratio.

    Args:
        mu: Ball-centre measure with weights ω_k r_y^k
        k: Dimension
        x0: Centre of the checked ball
        r: Radius of the checked ball
        radii: Ball radii (derived from the weights when omitted)
        scale_count: Number of dyadic scales t_j = r 2^{-(j+4)}
        levels: Dyadic levels in each ds/s integral (at least 8)
        delta: Optional hypothesis threshold for the verdict

    Raises:
        OverlappingBalls: two balls overlap
    """
    if not 0 <= k <= mu.n:
        raise ValidationError("k", str(k), f"0 <= k <= n={mu.n}")
    if not r > 0:
        raise ValidationError("r", str(r), "a positive scale")
    levels = max(int(levels), MIN_LEVELS)
    x0 = np.asarray(x0, dtype=float).reshape(mu.n)
    ball_radii = radii_from_weights(mu, k) if radii is None else np.asarray(radii, dtype=float).ravel()
    if ball_radii.shape[0] != len(mu):
        raise ValidationError("radii", f"{ball_radii.shape[0]} entries", f"{len(mu)} radii")
    check_disjoint(mu.points, ball_radii)

    scales = [r * 2.0 ** (-(j + 4)) for j in range(scale_count)]
    exponents = list(range(4, 4 + scale_count + levels - 1))
    support = mu.ball_indices(x0, r)
    support = support[mu.weights[support] > 0]

    # D^k_μ(z, r 2^{-m}) for every support point z and every exponent m used.
    def displacements(index: int) -> Dict[int, float]:
        values = {}
        for m in exponents:
            try:
                values[m] = displacement(mu, mu.points[index], r * 2.0 ** (-m), k)[0]
            except EmptyRestriction:
                values[m] = 0.0
        return values

    table = dict(zip(support.tolist(), parallel_map(displacements, support.tolist())))

    hypothesis = []
    for j, t in enumerate(scales):
        inner = {z: math.log(2.0) * sum(table[z][4 + j + l] for l in range(levels)) for z in table}
        worst = 0.0
        for y in support:
            near = [z for z in mu.ball_indices(mu.points[y], t).tolist() if z in inner]
            integral = sum(mu.weights[z] * inner[z] for z in near)
            worst = max(worst, integral / t ** k)
        hypothesis.append(worst)

    packing_ratio = mu.mass_in_ball(x0, r) / r ** k
    report = PackingReport(
        k=k,
        x0=x0.tolist(),
        r=float(r),
        scales=scales,
        hypothesis_ratios=hypothesis,
        packing_ratio=packing_ratio,
        packing_bound=4.0 * unit_ball_volume(k),
        ahlfors=ahlfors_ratios(mu, k, scales, mu.points[support]),
        delta=delta,
        centers_checked=int(support.size),
    )
    logger.info(f"Reifenberg check k={k} r={r:.4g}: hypothesis max {report.hypothesis_max:.4g}, packing {packing_ratio:.4g}")
    return report


@dataclass
class BetaBoundCheck:
    """Displacement against the integrated density gap at one (x, r)."""
    x: List[float]
    r: float
    k: int
    displacement: float
    gap_integral: float
    invariance_deficit: float
    qualifies: bool

    @property
    def ratio(self) -> float:
        if self.displacement == 0.0:
            return 0.0
        if self.gap_integral <= 0.0:
            return math.inf
        return self.displacement / self.gap_integral

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x,
            "r": self.r,
            "k": self.k,
            "displacement": self.displacement,
            "gap_integral": self.gap_integral,
            "invariance_deficit": self.invariance_deficit,
            "qualifies": self.qualifies,
            "ratio": self.ratio,
        }


def beta_bound_check(
    u: BaseField,
    mu: DiscreteMeasure,
    x,
    r: float,
    k: int,
    gamma: float,
    evaluator: Optional[DensityEvaluator] = None,
    settings: Optional[QuadratureConfig] = None,
) -> BetaBoundCheck:
    """
    Compare D^k_μ(x, r) with r^{-k} Σ_{y ∈ B_r(x)} w_y W_r(u, y).

    The configuration qualifies when u is far from (k+1)-invariant at
    (x, r): min_invariance_deficit(k+1) > gamma.

    Raises:
        EmptyRestriction: μ has no mass in B_r(x)
        OutOfDomain: some B_{20r}(y) leaves the field's domain
    """
    x = np.asarray(x, dtype=float).reshape(u.n)
    evaluator = evaluator or DensityEvaluator(u, settings)
    left, _ = displacement(mu, x, r, k)
    indices = mu.ball_indices(x, r)
    gaps = [evaluator.density_gap(mu.points[i], r) for i in indices]
    right = r ** (-k) * float(np.sum(mu.weights[indices] * np.asarray(gaps))) if len(gaps) else 0.0
    deficit = 0.0
    if k + 1 <= u.n:
        deficit, _ = min_invariance_deficit(u, x, r, k + 1, evaluator=evaluator)
    return BetaBoundCheck(x.tolist(), float(r), k, float(left), right, float(deficit), bool(deficit > gamma))


def fit_beta_constant(checks: Sequence[BetaBoundCheck]) -> Optional[float]:
    """Smallest Ĉ with displacement ≤ Ĉ · gap integral over the qualifying checks."""
    ratios = [check.ratio for check in checks if check.qualifies]
    return max(ratios) if ratios else None
