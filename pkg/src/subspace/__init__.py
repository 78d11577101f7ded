"""
Subspace package: weighted atomic measures, second-moment spectra,
best-fit affine subspaces, displacements and pair distances.
"""

from .fitting import displacement, displacement_bruteforce, moment_spectrum, subspace_distance
from .jacobi import canonical_signs, jacobi_eigh
from .measure import AffineSubspace, DiscreteMeasure, MomentSpectrum, measure_from_file_data
from .pair_metric import bump_family, field_distance, measure_distance, pair_distance

__all__ = [
    'DiscreteMeasure',
    'AffineSubspace',
    'MomentSpectrum',
    'measure_from_file_data',
    'jacobi_eigh',
    'canonical_signs',
    'moment_spectrum',
    'displacement',
    'displacement_bruteforce',
    'subspace_distance',
    'bump_family',
    'field_distance',
    'measure_distance',
    'pair_distance',
]
