"""
Stratum membership by dyadic symmetry scans, and the strata report.

x belongs to the k-th stratum at scale r_min when no dyadic scale
s ∈ [r_min, 1) makes u (k+1, ε)-symmetric in B_s(x). One scan per point
records the density gap and the gradient-moment spectrum at each scale;
every k is then read off the same record, which makes the nesting
S^0 ⊆ S^1 ⊆ ... hold by construction.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.config import QuadratureConfig
from ..core.exceptions import OutOfDomain, ValidationError
from ..core.workers import parallel_map
from ..density import DensityEvaluator
from ..fields import BaseField, ProblemParams
from ..subspace import jacobi_eigh
from .regularity import regularity_scale

logger = logging.getLogger(__name__)

UNDETERMINED_FRACTION = 0.25


def dyadic_scales(r_min: float, top: float = 1.0) -> List[float]:
    """r_min · 2^j for every j with r_min · 2^j < top."""
    if not r_min > 0:
        raise ValidationError("r_min", str(r_min), "a positive scale")
    scales = []
    s = float(r_min)
    while s < top * (1.0 - 1e-12):
        scales.append(s)
        s *= 2.0
    if not scales:
        raise ValidationError("r_min", str(r_min), f"a scale below {top}")
    return scales


def knp(n: int, p: float) -> int:
    """
    n - floor(alpha_p), or n - alpha_p + 1 when alpha_p is an integer.

    Raises:
        SupercriticalityViolated: p ≤ (n+2)/(n-2)
    """
    alpha_p = ProblemParams(n, p).alpha_p
    nearest = round(alpha_p)
    if abs(alpha_p - nearest) <= 1e-12:
        return int(n - nearest + 1)
    return int(n - math.floor(alpha_p))


@dataclass
class PointScan:
    """Per-scale deficits at one point."""
    x: List[float]
    scales: List[float]
    gaps: List[Optional[float]]
    spectra: List[Optional[List[float]]]
    skipped: int = 0

    @property
    def undetermined(self) -> bool:
        return self.skipped > UNDETERMINED_FRACTION * len(self.scales)

    def min_deficit(self, index: int, k: int) -> float:
        """Sum of the k smallest moment eigenvalues at scale index."""
        spectrum = self.spectra[index]
        if k == 0:
            return 0.0
        return float(np.sum(np.clip(spectrum[-k:], 0.0, None)))

    def symmetric_at(self, index: int, k: int, eps: float) -> Optional[bool]:
        if self.gaps[index] is None:
            return None
        return self.gaps[index] < eps and self.min_deficit(index, k) < eps

    def member(self, k: int, eps: float) -> Optional[bool]:
        """Membership in the k-th stratum; None when undetermined."""
        if self.undetermined:
            return None
        n = len(self.x)
        if k >= n:
            return True
        for i in range(len(self.scales)):
            if self.symmetric_at(i, k + 1, eps):
                return False
        return True


def scan_point(
    u: BaseField,
    x,
    r_min: float,
    evaluator: Optional[DensityEvaluator] = None,
    settings: Optional[QuadratureConfig] = None,
) -> PointScan:
    """Density gaps and moment spectra at every dyadic scale in [r_min, 1)."""
    x = np.asarray(x, dtype=float).reshape(u.n)
    evaluator = evaluator or DensityEvaluator(u, settings)
    scales = dyadic_scales(r_min)
    gaps, spectra, skipped = [], [], 0
    for s in scales:
        if not u.contains_ball(x, 20.0 * s):
            gaps.append(None)
            spectra.append(None)
            skipped += 1
            continue
        gaps.append(float(evaluator.density_gap(x, s)))
        eigenvalues, _, _ = jacobi_eigh(evaluator.gradient_moment(x, s))
        spectra.append(eigenvalues.tolist())
    if skipped:
        logger.warning(f"Skipped {skipped} of {len(scales)} scales at {x.tolist()}: balls leave the domain")
    return PointScan(x.tolist(), scales, gaps, spectra, skipped)


def stratum_membership(
    u: BaseField,
    x,
    k: int,
    eps: float,
    r_min: float,
    evaluator: Optional[DensityEvaluator] = None,
    settings: Optional[QuadratureConfig] = None,
) -> bool:
    """
    True iff u is (k+1, eps)-symmetric in B_s(x) at no dyadic s ∈ [r_min, 1).

    Raises:
        OutOfDomain: more than a quarter of the scales leave the domain
    """
    if not 0 <= k:
        raise ValidationError("k", str(k), "a nonnegative stratum index")
    if not eps > 0:
        raise ValidationError("eps", str(eps), "a positive threshold")
    scan = scan_point(u, x, r_min, evaluator, settings)
    member = scan.member(k, eps)
    if member is None:
        raise OutOfDomain(np.asarray(x, dtype=float), 20.0 * scan.scales[-1], u.domain_description())
    return member


def small_gap_scale(
    u: BaseField,
    y,
    r0: float,
    evaluator: Optional[DensityEvaluator] = None,
    settings: Optional[QuadratureConfig] = None,
) -> Tuple[float, float]:
    """The dyadic scale in [r0, 1/2] with the smallest density gap at y, and that gap."""
    y = np.asarray(y, dtype=float).reshape(u.n)
    evaluator = evaluator or DensityEvaluator(u, settings)
    best_scale, best_gap = None, math.inf
    for s in dyadic_scales(r0, top=0.5 * (1.0 + 1e-9)):
        gap = evaluator.density_gap(y, s)
        if gap < best_gap:
            best_scale, best_gap = s, gap
    return float(best_scale), float(best_gap)


@dataclass
class StrataReport:
    """Stratum memberships, indices and regularity scales over sample points."""
    eps: float
    r_min: float
    k_max: int
    scales: List[float]
    scans: List[PointScan]
    memberships: List[List[Optional[bool]]]
    regularity: List[Dict[str, float]] = field(default_factory=list)

    @property
    def stratum_indices(self) -> List[Optional[int]]:
        """
        Smallest k with x in S^k per point (None if none or undetermined).

        The strata are nested, S^k ⊂ S^{k+1}, so membership then holds for
        every larger k up to k_max and the index names the layer
        S^k \\ S^{k-1} the point lies in.
        """
        indices = []
        for row in self.memberships:
            index = next((k for k, member in enumerate(row) if member), None)
            indices.append(index)
        return indices

    def nesting_holds(self) -> bool:
        for row in self.memberships:
            for k in range(len(row) - 1):
                if row[k] and row[k + 1] is False:
                    return False
        return True

    def members(self, k: int) -> np.ndarray:
        """Sample points in the k-th stratum."""
        rows = [scan.x for scan, row in zip(self.scans, self.memberships) if row[k]]
        n = len(self.scans[0].x) if self.scans else 0
        return np.asarray(rows, dtype=float).reshape(-1, n)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eps": self.eps,
            "r_min": self.r_min,
            "k_max": self.k_max,
            "scales": self.scales,
            "scale_grid": "dyadic",
            "points": [scan.x for scan in self.scans],
            "gaps": [scan.gaps for scan in self.scans],
            "spectra": [scan.spectra for scan in self.scans],
            "memberships": self.memberships,
            "stratum_index": self.stratum_indices,
            "stratum_index_rule": "smallest k with membership (strata are nested)",
            "undetermined": [scan.undetermined for scan in self.scans],
            "skipped_scales": [scan.skipped for scan in self.scans],
            "regularity": self.regularity,
            "nesting_holds": self.nesting_holds(),
        }

    def csv_rows(self) -> List[List[Any]]:
        header = ["point", "coordinates", "stratum_index", "undetermined", "r0", "r1"]
        rows = [header]
        for i, (scan, index) in enumerate(zip(self.scans, self.stratum_indices)):
            reg = self.regularity[i] if i < len(self.regularity) else {}
            rows.append([
                i, " ".join(f"{c:.12g}" for c in scan.x),
                "" if index is None else index, scan.undetermined,
                reg.get("r0", ""), reg.get("r1", ""),
            ])
        return rows


def classify_strata(
    u: BaseField,
    points: Sequence[Sequence[float]],
    eps: float,
    r_min: float,
    k_max: Optional[int] = None,
    evaluator: Optional[DensityEvaluator] = None,
    settings: Optional[QuadratureConfig] = None,
    regularity_orders: Sequence[int] = (0, 1),
) -> StrataReport:
    """
    Classify many points, in parallel over points.

    Args:
        u: Field
        points: Sample points
        eps: Symmetry threshold
        r_min: Smallest dyadic scale
        k_max: Largest stratum index reported (n - 1 by default)
        evaluator: Shared density evaluator
        settings: Quadrature settings for a new evaluator
        regularity_orders: Orders j whose regularity scales are reported

    Returns:
        StrataReport
    """
    if not eps > 0:
        raise ValidationError("eps", str(eps), "a positive threshold")
    k_max = u.n - 1 if k_max is None else int(k_max)
    if not 0 <= k_max <= u.n - 1:
        raise ValidationError("k_max", str(k_max), f"0 <= k_max <= n-1={u.n - 1}")
    evaluator = evaluator or DensityEvaluator(u, settings)
    points = [np.asarray(x, dtype=float).reshape(u.n) for x in points]

    def classify(x: np.ndarray):
        scan = scan_point(u, x, r_min, evaluator)
        row = [scan.member(k, eps) for k in range(k_max + 1)]
        reg = {f"r{j}": regularity_scale(u, x, j) for j in regularity_orders}
        return scan, row, reg

    results = parallel_map(classify, points)
    report = StrataReport(
        eps=float(eps),
        r_min=float(r_min),
        k_max=k_max,
        scales=dyadic_scales(r_min),
        scans=[scan for scan, _, _ in results],
        memberships=[row for _, row, _ in results],
        regularity=[reg for _, _, reg in results],
    )
    if not report.nesting_holds():
        logger.error("Stratum nesting violated")
    undetermined = sum(1 for scan in report.scans if scan.undetermined)
    logger.info(f"Classified {len(points)} points ({undetermined} undetermined) at eps={eps} r_min={r_min}")
    return report
