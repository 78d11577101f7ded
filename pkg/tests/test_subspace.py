import numpy as np
import pytest

from src.core.exceptions import BadFrame, EmptyRestriction, ValidationError
from src.core.sampling import halton_ball
from src.fields import make_singular_solution
from src.subspace import (
    AffineSubspace,
    DiscreteMeasure,
    bump_family,
    displacement,
    displacement_bruteforce,
    field_distance,
    jacobi_eigh,
    measure_distance,
    measure_from_file_data,
    moment_spectrum,
    pair_distance,
    subspace_distance,
)


def _random_cloud(seed: int, count: int = 20, n: int = 3) -> DiscreteMeasure:
    rng = np.random.default_rng(seed)
    points = rng.uniform(-1.0, 1.0, (4 * count, n))
    points = points[np.linalg.norm(points, axis=1) <= 1.0][:count]
    return DiscreteMeasure(points, rng.uniform(0.1, 1.0, points.shape[0]))


def test_jacobi_matches_numpy():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(5, 5))
    a = a + a.T
    values, vectors, sweeps = jacobi_eigh(a)
    assert np.allclose(values, np.sort(np.linalg.eigvalsh(a))[::-1], atol=1e-10)
    assert np.allclose(a @ vectors, vectors * values, atol=1e-10)
    assert sweeps >= 1


def test_jacobi_rejects_asymmetric():
    with pytest.raises(ValidationError):
        jacobi_eigh([[1.0, 2.0], [0.0, 1.0]])


@pytest.mark.parametrize("seed", range(5))
def test_spectrum_eigen_residual(seed):
    spectrum = moment_spectrum(_random_cloud(seed), np.zeros(3), 1.0)
    assert spectrum.eigen_residual() <= 1e-10
    assert np.all(np.diff(spectrum.eigenvalues) <= 0)


def test_collinear_points_have_zero_line_displacement():
    t = np.linspace(-0.5, 0.5, 11)
    mu = DiscreteMeasure(np.column_stack([t, 2.0 * t, np.zeros_like(t)]))
    value, plane = displacement(mu, np.zeros(3), 2.0, 1)
    assert value == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(np.abs(plane.frame[0]), np.array([1.0, 2.0, 0.0]) / np.sqrt(5.0))
    assert displacement(mu, np.zeros(3), 2.0, 0)[0] > 0.0


def test_empty_restriction():
    mu = DiscreteMeasure([[2.0, 0.0, 0.0]])
    with pytest.raises(EmptyRestriction):
        displacement(mu, np.zeros(3), 1.0, 1)


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("seed", range(100))
def test_displacement_agrees_with_bruteforce(seed, k):
    mu = _random_cloud(seed)
    exact, _ = displacement(mu, np.zeros(3), 1.0, k)
    sampled = displacement_bruteforce(mu, np.zeros(3), 1.0, k, seed=seed)
    assert sampled >= exact * (1.0 - 1e-9)
    assert sampled == pytest.approx(exact, rel=1e-3)


def test_subspace_distance():
    line = AffineSubspace(np.zeros(3), [[1.0, 0.0, 0.0]])
    shifted = AffineSubspace(np.array([0.0, 0.1, 0.0]), [[1.0, 0.0, 0.0]])
    assert subspace_distance(line, line) == pytest.approx(0.0, abs=1e-12)
    assert subspace_distance(line, shifted) > 0.0


def test_subspace_frame_must_be_orthonormal():
    with pytest.raises(BadFrame):
        AffineSubspace(np.zeros(3), [[1.0, 1.0, 0.0]])


def test_measure_distance_between_point_masses():
    at_origin = DiscreteMeasure([[0.0, 0.0, 0.0]])
    moved = DiscreteMeasure([[0.1, 0.0, 0.0]])
    assert measure_distance(at_origin, at_origin, np.zeros(3), 1.0) == 0.0
    assert measure_distance(at_origin, moved, np.zeros(3), 1.0) > 0.0


def test_measure_file_data():
    points = halton_ball(3, 5)
    mu = measure_from_file_data({"points": points.tolist(), "weights": [1.0] * 5}, 3)
    assert len(mu) == 5
    assert mu.total_mass == pytest.approx(5.0)
    with pytest.raises(ValidationError):
        DiscreteMeasure(points, [-1.0] * 5)


@pytest.mark.parametrize("seed, k", [(4, 1), (5, 2)])
def test_displacement_invariant_under_rigid_motion(seed, k):
    mu = _random_cloud(seed)
    rng = np.random.default_rng(seed)
    rotation, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    shift = rng.uniform(-2.0, 2.0, 3)
    x = np.array([0.1, -0.2, 0.05])
    value, _ = displacement(mu, x, 1.5, k)
    moved, _ = displacement(mu.transformed(rotation, shift), rotation @ x + shift, 1.5, k)
    assert moved == pytest.approx(value, rel=1e-10)


def test_subspace_distance_of_rotated_line():
    line = AffineSubspace(np.zeros(3), [[1.0, 0.0, 0.0]])
    tilted = AffineSubspace(np.zeros(3), [[np.cos(0.3), np.sin(0.3), 0.0]])
    assert subspace_distance(line, tilted) == pytest.approx(0.3, rel=1e-12)


def test_subspace_distance_of_orthogonal_lines():
    e1 = AffineSubspace(np.zeros(3), [[1.0, 0.0, 0.0]])
    e2 = AffineSubspace(np.zeros(3), [[0.0, 1.0, 0.0]])
    assert subspace_distance(e1, e2) == pytest.approx(np.pi / 2.0, rel=1e-12)
    assert subspace_distance(e1, e2, affine=False) == pytest.approx(np.pi / 2.0, rel=1e-12)


# Pair metric

def test_bump_centres_sit_on_dyadic_cells():
    centres, half_sides = bump_family(3, 64)
    assert np.allclose(centres[0], 0.0)
    assert half_sides[0] == 1.0
    for index, (centre, half_side) in enumerate(zip(centres, half_sides), start=1):
        level = int(np.floor(np.log2(index)))
        assert half_side == 2.0 ** -level
        cells = (centre + 1.0) / (2.0 * half_side) - 0.5
        assert np.allclose(cells, np.round(cells), atol=1e-12)
        assert np.all((np.round(cells) >= 0) & (np.round(cells) < 2 ** level))


def test_bump_family_is_prefix_stable():
    small, small_sides = bump_family(4, 16)
    large, large_sides = bump_family(4, 64)
    assert np.array_equal(small, large[:16])
    assert np.array_equal(small_sides, large_sides[:16])
    with pytest.raises(ValidationError):
        bump_family(4, 0)


def test_pair_distance_is_symmetric(fast_quadrature):
    at_origin = make_singular_solution(5, 2.5, 0)
    shifted = make_singular_solution(5, 2.5, 0, center=[0.1, 0.0, 0.0, 0.0, 0.0])
    mu = DiscreteMeasure([[0.0] * 5])
    eta = DiscreteMeasure([[0.1, 0.0, 0.0, 0.0, 0.0]])
    x = np.zeros(5)

    forward = field_distance(at_origin, shifted, x, 0.5, fast_quadrature)
    backward = field_distance(shifted, at_origin, x, 0.5, fast_quadrature)
    assert forward > 0.0
    assert forward == backward

    ab = pair_distance(at_origin, mu, shifted, eta, x, 0.5, settings=fast_quadrature)
    ba = pair_distance(shifted, eta, at_origin, mu, x, 0.5, settings=fast_quadrature)
    assert ab == ba
    assert pair_distance(at_origin, mu, at_origin, mu, x, 0.5, settings=fast_quadrature) == 0.0


def test_field_distance_requires_matching_exponent(fast_quadrature):
    with pytest.raises(ValidationError):
        field_distance(
            make_singular_solution(5, 2.5, 0), make_singular_solution(5, 3.0, 0), np.zeros(5), 0.5, fast_quadrature
        )
