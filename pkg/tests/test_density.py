import numpy as np
import pytest

from src.core.config import QuadratureConfig
from src.core.exceptions import NegativeArgument, OutOfDomain
from src.density import (
    PHI,
    DensityEvaluator,
    ScalarTestFunction,
    VectorTestField,
    cutoff_phi,
    density_gap,
    density_scan,
    fit_deficit_constant,
    fit_nondegeneracy_constant,
    radial_deficit,
    sphere_area,
    sphere_rule,
    stationarity_residual_estimate,
    theta,
    theta_closed_form,
    theta_estimate,
    vartheta,
    vartheta_alternate,
    vartheta_closed_form,
    vartheta_derivative,
    vartheta_estimate,
    weak_residual_estimate,
)
from src.fields import blow_up, make_singular_solution, sample_to_grid


def test_cutoff_shape():
    assert PHI.phi(0.0) == pytest.approx(8.75)
    assert PHI.phi(10.0) == 0.0
    assert PHI.phi_prime(4.0) == -1.0
    assert PHI.phi(8.0 - 1e-12) == pytest.approx(PHI.phi(8.0 + 1e-12), abs=1e-9)
    assert PHI.phi_prime(9.5 - 1e-12) == pytest.approx(0.0, abs=1e-9)


def test_cutoff_pair_on_plateau():
    assert cutoff_phi(4.0) == pytest.approx((4.75, -1.0))
    assert cutoff_phi(0.0) == pytest.approx((8.75, -1.0))


@pytest.mark.parametrize("n", [3, 4])
def test_sphere_rule_integrates_low_moments_exactly(n):
    dirs, weights = sphere_rule(n, 6)
    area = sphere_area(n)
    assert np.sum(weights) == pytest.approx(area, rel=1e-12)
    for axis in range(n):
        assert weights @ dirs[:, axis] ** 2 == pytest.approx(area / n, rel=1e-12)
        assert weights @ dirs[:, axis] ** 4 == pytest.approx(3.0 * area / (n * (n + 2)), rel=1e-12)
    assert weights @ (dirs[:, 0] * dirs[:, 1]) ** 2 == pytest.approx(area / (n * (n + 2)), rel=1e-12)


def test_default_three_dimensional_rule_has_512_directions():
    dirs, _ = sphere_rule(3, QuadratureConfig().angular_order_for(3))
    assert dirs.shape == (512, 3)


def test_cutoff_rejects_negative_argument():
    with pytest.raises(NegativeArgument):
        cutoff_phi(-0.1)


def test_cutoff_moments_integrate_by_parts():
    assert PHI.derivative_moment(2.0) == pytest.approx(-2.0 * PHI.moment(1.0), rel=1e-12)


def test_centered_densities_are_scale_invariant(point_field):
    values = [theta_estimate(point_field, np.zeros(5), r) for r in (0.05, 0.1, 0.4)]
    assert all(v.rule == "closed_form" for v in values)
    assert all(float(v.value) == pytest.approx(theta_closed_form(point_field)) for v in values)
    assert vartheta(point_field, np.zeros(5), 0.05) == vartheta(point_field, np.zeros(5), 0.4)
    assert density_gap(point_field, np.zeros(5), 0.1) == 0.0


def test_vartheta_positive_near_regular_point(point_field, fast_quadrature):
    value = vartheta(point_field, [0.5, 0.0, 0.0, 0.0, 0.0], 0.05, fast_quadrature)
    assert value > 0.0


def test_vartheta_needs_ten_r_ball():
    field = make_singular_solution(3, 7.0, 0, center=[0.05, 0.05, 0.05])
    grid = sample_to_grid(field, -0.5, 1.0, 0.1)
    with pytest.raises(OutOfDomain):
        vartheta_estimate(grid, np.zeros(3), 0.1)


def test_zero_field_scan_is_flat(zero_field, fast_quadrature):
    scan = density_scan(zero_field, np.zeros(5), [0.2, 0.05, 0.1], fast_quadrature)
    assert scan.radii == [0.05, 0.1, 0.2]
    assert scan.theta == [0.0, 0.0, 0.0]
    assert scan.vartheta == [0.0, 0.0, 0.0]
    assert scan.monotone
    assert scan.csv_rows()[0] == ["r", "theta", "vartheta", "W", "tol"]


def test_centered_scan_has_zero_gaps(point_field, fast_quadrature):
    scan = density_scan(point_field, np.zeros(5), [0.05, 0.1, 0.2, 0.4], fast_quadrature)
    assert scan.gaps == [0.0, 0.0, 0.0, 0.0]
    spread = max(scan.vartheta) - min(scan.vartheta)
    assert spread <= 1e-3 * abs(vartheta_closed_form(point_field))


def test_residuals_vanish_for_solution(point_field):
    settings = QuadratureConfig(radial_nodes=32, angular_order=8, estimate_tolerance=False)
    center = np.array([0.5, 0.0, 0.0, 0.0, 0.0])
    scalar = ScalarTestFunction(center, 0.2)
    vector = VectorTestField(center, 0.2, np.eye(5) + 0.1 * np.ones((5, 5)), np.ones(5))
    weak = weak_residual_estimate(point_field, scalar, settings)
    stationary = stationarity_residual_estimate(point_field, vector, settings)
    assert abs(weak.value) <= 1e-3 * weak.magnitude
    assert abs(stationary.value) <= 1e-3 * stationary.magnitude


def test_evaluator_matches_closed_form_on_singular_set(point_field, fast_quadrature):
    evaluator = DensityEvaluator(point_field, fast_quadrature)
    assert evaluator.vartheta(np.zeros(5), 0.1) == pytest.approx(vartheta_closed_form(point_field))
    assert evaluator.density_gap(np.zeros(5), 0.1) == pytest.approx(0.0, abs=1e-12)


def test_evaluator_profile_tracks_direct_quadrature(point_field, fast_quadrature):
    evaluator = DensityEvaluator(point_field, fast_quadrature)
    y = np.array([0.05, 0.0, 0.0, 0.0, 0.0])
    direct = vartheta(point_field, y, 0.1, fast_quadrature)
    assert evaluator.vartheta(y, 0.1) == pytest.approx(direct, abs=1e-2 * abs(vartheta_closed_form(point_field)))


def test_evaluator_far_field_decays(point_field, fast_quadrature):
    evaluator = DensityEvaluator(point_field, fast_quadrature)
    y = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    near, far = abs(evaluator.vartheta(y, 1e-2)), abs(evaluator.vartheta(y, 1e-3))
    assert far < near


def test_alternate_form_agrees_for_solution(point_field):
    settings = QuadratureConfig(radial_nodes=32, angular_order=8, estimate_tolerance=False)
    x = [0.5, 0.0, 0.0, 0.0, 0.0]
    direct = vartheta(point_field, x, 0.05, settings)
    assert vartheta_alternate(point_field, x, 0.05, settings) == pytest.approx(direct, rel=1e-2)


def test_alternate_form_detects_wrong_constant():
    settings = QuadratureConfig(radial_nodes=32, angular_order=8, estimate_tolerance=False)
    u = make_singular_solution(5, 2.5, 0, c0=1.0)
    x = [0.5, 0.0, 0.0, 0.0, 0.0]
    direct = vartheta(u, x, 0.05, settings)
    assert abs(vartheta_alternate(u, x, 0.05, settings) - direct) > 1e-2 * abs(direct)


def test_density_derivative_is_nonnegative(point_field, fast_quadrature):
    assert vartheta_derivative(point_field, np.zeros(5), 0.1) == 0.0
    assert vartheta_derivative(point_field, [0.3, 0.0, 0.0, 0.0, 0.0], 0.05, fast_quadrature) >= 0.0


def test_theta_scales_with_blow_up(point_field, fast_quadrature):
    x = np.array([0.3, 0.1, 0.0, 0.0, 0.0])
    rescaled = blow_up(point_field, x, 0.5)
    assert theta(rescaled, np.zeros(5), 0.2, fast_quadrature) == pytest.approx(
        theta(point_field, x, 0.1, fast_quadrature), rel=1e-10
    )


def test_theta_stable_under_node_doubling():
    field = make_singular_solution(3, 7.0, 0)
    x = [0.5, 0.0, 0.0]
    coarse = QuadratureConfig(radial_nodes=32, angular_order=8, estimate_tolerance=False)
    fine = QuadratureConfig(radial_nodes=64, angular_order=16, estimate_tolerance=False)
    assert theta(field, x, 0.05, fine) == pytest.approx(theta(field, x, 0.05, coarse), rel=1e-6)


# Radial deficit

def test_radial_deficit_vanishes_on_singular_set(point_field, line_field, fast_quadrature):
    assert radial_deficit(point_field, np.zeros(5), 0.05, fast_quadrature) == 0.0
    assert radial_deficit(line_field, [0.3, 0.0, 0.0, 0.0, 0.0, 0.0], 0.05, fast_quadrature) == 0.0


def test_radial_deficit_positive_off_singular_set(point_field, fast_quadrature):
    assert radial_deficit(point_field, [0.5, 0.0, 0.0, 0.0, 0.0], 0.05, fast_quadrature) > 0.0


@pytest.mark.parametrize("x", [
    [0.3, 0.0, 0.0, 0.0, 0.0],
    [0.1, 0.1, 0.0, 0.0, 0.0],
    [0.0, 0.2, -0.2, 0.1, 0.0],
])
def test_off_center_scan_is_monotone(point_field, x):
    settings = QuadratureConfig(radial_nodes=32, angular_order=6)
    scan = density_scan(point_field, x, [0.02, 0.04, 0.08, 0.16], settings)
    assert scan.monotone
    for gap, tol in zip(scan.gaps, scan.tolerances):
        assert gap >= -tol


# Residuals

def _residual_test_fields():
    center = np.array([0.5, 0.0, 0.0, 0.0, 0.0])
    scalar = ScalarTestFunction(center, 0.2)
    vector = VectorTestField(center, 0.2, np.eye(5) + 0.1 * np.ones((5, 5)), np.ones(5))
    return scalar, vector


def test_residuals_detect_wrong_constant(point_field):
    settings = QuadratureConfig(radial_nodes=32, angular_order=8, estimate_tolerance=False)
    doubled = make_singular_solution(5, 2.5, 0, c0=2.0 * point_field.c0)
    scalar, vector = _residual_test_fields()
    weak = weak_residual_estimate(doubled, scalar, settings)
    stationary = stationarity_residual_estimate(doubled, vector, settings)
    assert abs(weak.value) > 5e-2 * weak.magnitude
    assert abs(stationary.value) > 1e-2 * stationary.magnitude
    assert abs(stationary.value) > 10.0 * abs(stationarity_residual_estimate(point_field, vector, settings).value)


def test_zero_field_residuals_vanish(zero_field, fast_quadrature):
    scalar, vector = _residual_test_fields()
    assert weak_residual_estimate(zero_field, scalar, fast_quadrature).value == 0.0
    assert stationarity_residual_estimate(zero_field, vector, fast_quadrature).value == 0.0


# Fitted constants

def _random_centres_and_scales(seed: int, count: int, scales) -> np.ndarray:
    rng = np.random.default_rng(seed)
    centres = rng.uniform(-0.3, 0.3, (count, 5))
    return np.column_stack([centres, rng.choice(scales, count)])


def test_nondegeneracy_constant_over_random_centres_and_scales(point_field, fast_quadrature):
    rows = np.vstack([_random_centres_and_scales(11, 6, [0.02, 0.05]), [[0.5, 0.0, 0.0, 0.0, 0.0, 0.05]]])
    fit = fit_nondegeneracy_constant(point_field, rows, fast_quadrature)
    assert fit.name == "nondegeneracy"
    assert 1 <= fit.samples <= len(rows)
    assert fit.value == max(fit.ratios)
    assert np.isfinite(fit.value)
    assert fit.to_dict()["max_ratio"] == fit.value


def test_deficit_constant_is_positive(point_field):
    settings = QuadratureConfig(radial_nodes=32, angular_order=6, estimate_tolerance=False)
    rows = [
        [0.1, 0.0, 0.0, 0.0, 0.0, 0.02],
        [0.1, 0.0, 0.0, 0.0, 0.0, 0.05],
        [0.2, 0.1, 0.0, 0.0, 0.0, 0.03],
    ]
    fit = fit_deficit_constant(point_field, rows, settings)
    assert fit.samples == 3
    assert fit.value == min(fit.ratios)
    assert fit.value > 0.0
