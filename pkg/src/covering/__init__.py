"""
Covering package: effective spans, discrete Reifenberg checks, the
good/bad-ball cover, tube volumes and weak-L^q tails.
"""

from .cover import BallNode, CoverTree, build_cover, check_siblings_disjoint, depth_cap
from .reifenberg import (
    BetaBoundCheck,
    PackingReport,
    ahlfors_ratios,
    beta_bound_check,
    check_disjoint,
    fit_beta_constant,
    radii_from_weights,
    reifenberg_check,
    unit_ball_volume,
)
from .span import effective_span, span_subspace
from .volume import TailFit, minkowski_content, tail_distribution, tail_exponent, tube_volume

__all__ = [
    'effective_span',
    'span_subspace',
    'unit_ball_volume',
    'radii_from_weights',
    'check_disjoint',
    'ahlfors_ratios',
    'PackingReport',
    'reifenberg_check',
    'BetaBoundCheck',
    'beta_bound_check',
    'fit_beta_constant',
    'BallNode',
    'CoverTree',
    'build_cover',
    'check_siblings_disjoint',
    'depth_cap',
    'tube_volume',
    'minkowski_content',
    'tail_exponent',
    'TailFit',
    'tail_distribution',
]
