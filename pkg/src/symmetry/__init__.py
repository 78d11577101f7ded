"""
Symmetry package: invariance and homogeneity deficits, the two-condition
symmetry test, stratum classification and regularity scales.
"""

from .deficits import SymmetryProbe, hsv_symmetric, invariance_deficit, min_invariance_deficit
from .regularity import regularity_scale
from .strata import (
    PointScan,
    StrataReport,
    classify_strata,
    dyadic_scales,
    knp,
    scan_point,
    small_gap_scale,
    stratum_membership,
)

__all__ = [
    'invariance_deficit',
    'min_invariance_deficit',
    'SymmetryProbe',
    'hsv_symmetric',
    'regularity_scale',
    'dyadic_scales',
    'knp',
    'PointScan',
    'scan_point',
    'stratum_membership',
    'small_gap_scale',
    'StrataReport',
    'classify_strata',
]
