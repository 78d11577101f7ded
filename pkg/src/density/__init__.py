"""
Density package: the cutoff, ball quadrature, energy densities, monotonicity
gaps, symmetry deficits and PDE residuals.
"""

from .cutoff import PHI, CutoffPhi, cutoff_phi
from .energy import (
    ConstantFit,
    DensityScan,
    density_gap,
    density_gap_estimate,
    density_scan,
    fit_deficit_constant,
    fit_nondegeneracy_constant,
    gradient_moment,
    gradient_moment_estimate,
    radial_deficit,
    radial_deficit_estimate,
    theta,
    theta_closed_form,
    theta_estimate,
    vartheta,
    vartheta_alternate,
    vartheta_alternate_estimate,
    vartheta_closed_form,
    vartheta_derivative,
    vartheta_derivative_estimate,
    vartheta_estimate,
)
from .profile import DensityEvaluator, InvariantProfile, get_profile
from .quadrature import Estimate, FieldSample, integrate_ball, sphere_area, sphere_rule
from .residuals import (
    ScalarTestFunction,
    VectorTestField,
    random_test_fields,
    stationarity_residual,
    stationarity_residual_estimate,
    weak_residual,
    weak_residual_estimate,
)

__all__ = [
    'PHI',
    'CutoffPhi',
    'cutoff_phi',
    'Estimate',
    'FieldSample',
    'integrate_ball',
    'sphere_area',
    'sphere_rule',
    'theta',
    'theta_estimate',
    'theta_closed_form',
    'vartheta',
    'vartheta_estimate',
    'vartheta_closed_form',
    'vartheta_alternate',
    'vartheta_alternate_estimate',
    'vartheta_derivative',
    'vartheta_derivative_estimate',
    'density_gap',
    'density_gap_estimate',
    'radial_deficit',
    'radial_deficit_estimate',
    'gradient_moment',
    'gradient_moment_estimate',
    'DensityScan',
    'density_scan',
    'ConstantFit',
    'fit_nondegeneracy_constant',
    'fit_deficit_constant',
    'InvariantProfile',
    'DensityEvaluator',
    'get_profile',
    'ScalarTestFunction',
    'VectorTestField',
    'random_test_fields',
    'stationarity_residual',
    'stationarity_residual_estimate',
    'weak_residual',
    'weak_residual_estimate',
]
