import math

import numpy as np
import pytest

from src.core.exceptions import CoverageViolation, OverlappingBalls, UnsupportedOrder, ValidationError
from src.covering import (
    BallNode,
    ahlfors_ratios,
    beta_bound_check,
    build_cover,
    check_siblings_disjoint,
    depth_cap,
    effective_span,
    fit_beta_constant,
    minkowski_content,
    reifenberg_check,
    tail_distribution,
    tail_exponent,
    tube_volume,
    unit_ball_volume,
)
from src.density import DensityEvaluator
from src.fields import make_singular_solution, sample_to_grid
from src.subspace import DiscreteMeasure
from src.symmetry import classify_strata


# Effective span

def test_effective_span_of_segment():
    points = np.column_stack([np.linspace(0.0, 1.0, 11), np.zeros(11), np.zeros(11)])
    k, basis = effective_span(points, 0.1)
    assert k == 1
    assert np.allclose(basis[0], [0.0, 0.0, 0.0])
    assert np.allclose(basis[1], [1.0, 0.0, 0.0])


def test_effective_span_of_triangle():
    points = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.001, 0.0]])
    k, _ = effective_span(points, 0.1)
    assert k == 2
    k, _ = effective_span(points, 0.6)
    assert k == 0


def test_effective_span_single_point():
    k, basis = effective_span(np.array([[0.2, 0.3]]), 0.01)
    assert k == 0
    assert basis.shape == (1, 2)


def test_effective_span_needs_positive_rho():
    with pytest.raises(ValidationError):
        effective_span(np.zeros((2, 3)), 0.0)


# Reifenberg checks

def _segment_measure(k_radius: float = 0.05, spacing: float = 0.1) -> DiscreteMeasure:
    t = np.arange(-1.0, 1.0 + 1e-9, spacing)
    points = np.column_stack([t, np.zeros_like(t), np.zeros_like(t)])
    return DiscreteMeasure(points, np.full(t.size, unit_ball_volume(1) * k_radius))


def test_reifenberg_on_a_line():
    report = reifenberg_check(_segment_measure(), 1, np.zeros(3), 1.0, delta=1e-6)
    assert len(report.hypothesis_ratios) == 10
    assert report.hypothesis_max <= 1e-12
    assert report.packing_ratio <= 4.0 * unit_ball_volume(1)
    assert report.verdicts == {"hypothesis_small": True, "packing_bounded": True}


def test_reifenberg_rejects_overlap():
    mu = DiscreteMeasure([[0.0, 0.0], [0.05, 0.0]], [0.2, 0.2])
    with pytest.raises(OverlappingBalls):
        reifenberg_check(mu, 1, np.zeros(2), 1.0)


def test_ahlfors_ratio_of_point_mass():
    mu = DiscreteMeasure([[0.0, 0.0]], [0.3])
    assert ahlfors_ratios(mu, 1, [0.5]) == {"0.5": pytest.approx(0.6)}


def test_beta_bound_on_singular_line(line_field, fast_quadrature):
    t = np.linspace(-0.05, 0.05, 11)
    points = np.zeros((11, 6))
    points[:, 0] = t
    mu = DiscreteMeasure(points, np.full(11, 0.01))
    check = beta_bound_check(line_field, mu, np.zeros(6), 0.1, 1, gamma=0.01, settings=fast_quadrature)
    assert check.displacement == 0.0
    assert check.gap_integral == pytest.approx(0.0, abs=1e-10)
    assert check.qualifies
    assert fit_beta_constant([check]) == 0.0


def _circle_measure(count: int = 64, radius: float = 0.1, ball: float = 0.004) -> DiscreteMeasure:
    angles = 2.0 * math.pi * np.arange(count) / count
    points = np.column_stack([radius * np.cos(angles), radius * np.sin(angles), np.zeros(count)])
    return DiscreteMeasure(points, np.full(count, unit_ball_volume(1) * ball))


def _disk_measure(radius: float = 0.1, spacing: float = 0.01, ball: float = 0.004) -> DiscreteMeasure:
    steps = int(round(radius / spacing))
    grid = [(i * spacing, j * spacing, 0.0) for i in range(-steps, steps + 1) for j in range(-steps, steps + 1)
            if i * i + j * j <= steps * steps]
    return DiscreteMeasure(grid, np.full(len(grid), unit_ball_volume(1) * ball))


def test_reifenberg_separates_circle_from_disk():
    circle = reifenberg_check(_circle_measure(), 1, np.zeros(3), 0.2)
    disk = reifenberg_check(_disk_measure(), 1, np.zeros(3), 0.2)
    assert circle.verdicts["packing_bounded"]
    assert not disk.verdicts["packing_bounded"]
    assert disk.hypothesis_max > 0.0
    assert disk.hypothesis_max >= 10.0 * circle.hypothesis_max


def _antipodal_pair(s: float, r: float) -> DiscreteMeasure:
    y = np.zeros(5)
    y[0] = s * r
    return DiscreteMeasure([y, -y], [1.0, 1.0])


def test_fitted_beta_constant_holds_on_held_out_configurations(point_field, fast_quadrature):
    evaluator = DensityEvaluator(point_field, fast_quadrature)
    origin = np.zeros(5)
    tuning = [
        beta_bound_check(point_field, _antipodal_pair(s, 0.1), origin, 0.1, 0, 1e-3, evaluator=evaluator)
        for s in np.geomspace(0.2, 0.8, 41)
    ]
    assert all(check.qualifies for check in tuning)
    constant = 1.1 * fit_beta_constant(tuning)

    rng = np.random.default_rng(21)
    held_out = []
    for _ in range(120):
        count = int(rng.integers(2, 6))
        r = float(rng.uniform(0.05, 0.2))
        directions = rng.normal(size=(count, 5))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        scaled = 0.2 * 4.0 ** rng.uniform(0.0, 1.0, count)
        mu = DiscreteMeasure(r * scaled[:, None] * directions, rng.uniform(0.5, 1.5, count))
        held_out.append(beta_bound_check(point_field, mu, origin, r, 0, 1e-3, evaluator=evaluator))

    qualifying = [check for check in held_out if check.qualifies]
    assert len(qualifying) >= 100
    assert all(check.displacement > 0.0 for check in qualifying)
    assert [check.ratio for check in qualifying if check.ratio > constant] == []


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


# Tube volumes

def test_tube_volume_of_point():
    volume = tube_volume(np.zeros((1, 3)), 0.1, voxels_per_r=16)
    assert volume == pytest.approx(4.0 / 3.0 * math.pi * 0.1 ** 3, rel=0.05)


def test_tube_volume_of_segment():
    t = np.linspace(0.0, 1.0, 201)
    segment = np.column_stack([t, np.zeros_like(t), np.zeros_like(t)])
    r = 0.1
    expected = math.pi * r ** 2 + 4.0 / 3.0 * math.pi * r ** 3
    assert tube_volume(segment, r, voxels_per_r=16) == pytest.approx(expected, rel=0.05)


def test_tube_volume_in_four_dimensions_is_exact_for_one_point():
    volume = tube_volume(np.zeros((1, 4)), 0.2)
    assert volume == pytest.approx(unit_ball_volume(4) * 0.2 ** 4, rel=1e-12)


def test_tube_volume_respects_box():
    box = (np.zeros(3), np.ones(3))
    volume = tube_volume(np.zeros((1, 3)), 0.1, box=box, voxels_per_r=16)
    assert volume == pytest.approx(4.0 / 3.0 * math.pi * 0.1 ** 3 / 8.0, rel=0.1)


def test_tube_volume_empty_set():
    assert tube_volume(np.zeros((0, 3)), 0.1) == 0.0


def _log_log_slope(radii, volumes) -> float:
    return float(np.polyfit(np.log(radii), np.log(volumes), 1)[0])


def test_tube_volume_slope_on_detected_point_stratum(point_field, fast_quadrature):
    candidates = [np.zeros(5), np.array([0.5, 0.0, 0.0, 0.0, 0.0])]
    report = classify_strata(point_field, candidates, 0.1, 1.0 / 512.0, settings=fast_quadrature, regularity_orders=(0,))
    stratum = report.members(0)
    assert any(np.allclose(row, 0.0) for row in stratum)
    radii = [0.0125, 0.025, 0.05, 0.1]
    volumes = [tube_volume(stratum, r) for r in radii]
    assert _log_log_slope(radii, volumes) == pytest.approx(5.0, rel=0.1)


@pytest.mark.slow
def test_tube_volume_slope_on_detected_line_stratum(line_field, fast_quadrature):
    candidates = [np.zeros(6), np.zeros(6), np.zeros(6), np.array([0.0, 0.5, 0.0, 0.0, 0.0, 0.0])]
    candidates[0][0], candidates[2][0] = -0.2, 0.2
    report = classify_strata(line_field, candidates, 0.1, 1.0 / 256.0, settings=fast_quadrature, regularity_orders=(0,))
    detected = report.members(1)
    assert detected.shape == (3, 6)
    assert np.allclose(detected[:, 1:], 0.0)

    t = np.linspace(detected[:, 0].min(), detected[:, 0].max(), 161)
    segment = np.column_stack([t, np.zeros((t.size, 5))])
    slab = (np.array([-0.05] + [-1.0] * 5), np.array([0.05] + [1.0] * 5))
    radii = [0.0125, 0.025, 0.05, 0.1]
    volumes = [tube_volume(segment, r, box=slab, voxel_size=r / 3.0) for r in radii]
    assert _log_log_slope(radii, volumes) == pytest.approx(5.0, rel=0.1)


def test_minkowski_content_of_point():
    assert minkowski_content(np.zeros((1, 3)), 0.1, 0, voxels_per_r=16) == pytest.approx(math.pi / 6.0, rel=0.05)


# Tail distributions

def test_tail_exponents(point_field):
    assert tail_exponent(5, point_field.params.alpha, 0) == pytest.approx(15.0 / 4.0)
    assert tail_exponent(5, point_field.params.alpha, 1) == pytest.approx(15.0 / 7.0)


@pytest.mark.parametrize("j, levels, exponent", [
    (0, np.geomspace(4.0, 4.0e3, 16), 15.0 / 4.0),
    (1, np.geomspace(5.0, 5.0e3, 16), 15.0 / 7.0),
])
def test_tail_slope_of_point_singularity(point_field, fast_quadrature, j, levels, exponent):
    fit = tail_distribution(point_field, j, levels, settings=fast_quadrature)
    assert fit.method == "rays"
    assert fit.q_hat == pytest.approx(exponent, rel=0.05)
    assert fit.expected_exponent == pytest.approx(exponent)
    assert np.all(np.diff(fit.measures) <= 0)


def test_tail_superlevel_volume_is_a_ball(point_field, fast_quadrature):
    levels = np.geomspace(4.0, 4.0e3, 8)
    fit = tail_distribution(point_field, 0, levels, settings=fast_quadrature)
    radius = (point_field.c0 / levels[0]) ** (1.0 / point_field.params.alpha)
    assert fit.measures[0] == pytest.approx(unit_ball_volume(5) * radius ** 5, rel=1e-4)


def test_tail_needs_enough_levels(point_field):
    with pytest.raises(ValidationError):
        tail_distribution(point_field, 0, [1.0, 2.0, 3.0])


def test_grid_tail_order_limit():
    u = make_singular_solution(3, 7.0, 0, center=[0.05, 0.05, 0.05])
    grid = sample_to_grid(u, -0.5, 1.0, 0.05)
    with pytest.raises(UnsupportedOrder):
        tail_distribution(grid, 2, np.geomspace(1.0, 100.0, 8), radius=0.4)


# Cover trees

def test_depth_cap():
    assert depth_cap(1.0 / 16.0, 1.0, 1.0 / 128.0) == 3
    assert depth_cap(1e-4, 1.0, 1.0 / 128.0) == 4


def test_sibling_shrinks_must_be_disjoint():
    a = BallNode(np.zeros(2), 1.0, "terminal-r", 1)
    b = BallNode(np.array([0.1, 0.0]), 1.0, "terminal-r", 1)
    with pytest.raises(CoverageViolation):
        check_siblings_disjoint([a, b])
    c = BallNode(np.array([0.2, 0.0]), 1.0, "terminal-r", 1)
    check_siblings_disjoint([a, c])


def test_cover_rejects_scales_out_of_order(point_field):
    with pytest.raises(ValidationError, match="scales out of order"):
        build_cover(point_field, 0, 0.1, 0.5, 0.25)


def test_cover_of_zero_field_is_empty(zero_field, fast_quadrature, fast_cover):
    tree = build_cover(zero_field, 0, 0.1, 1.0 / 16.0, 1.0, settings=fast_quadrature, cover_config=fast_cover)
    assert tree.roots == []
    assert tree.leaves == []
    assert tree.leaf_tally == 0.0


def test_cover_of_point_singularity(point_field, fast_quadrature, fast_cover):
    r = 1.0 / 16.0
    tree = build_cover(point_field, 0, 0.1, r, 1.0, settings=fast_quadrature, cover_config=fast_cover)
    root = tree.roots[0]
    assert root.label == "good"
    assert root.span_dimension == 0
    leaves = tree.leaves
    assert any(np.allclose(leaf.center, 0.0) for leaf in leaves)
    assert all(leaf.radius == r for leaf in leaves)
    assert len(leaves) <= tree.stratum_points.shape[0]
    assert tree.uncovered().size == 0
    assert sum(tree.label_counts().values()) == len(leaves)


@pytest.mark.slow
def test_line_cover_tally_is_stable(line_field, fast_quadrature, fast_cover):
    tallies = []
    for r in (1.0 / 16.0, 1.0 / 32.0):
        tree = build_cover(line_field, 1, 0.1, r, 1.0, settings=fast_quadrature, cover_config=fast_cover)
        assert tree.roots[0].span_dimension == 1
        assert tree.uncovered().size == 0
        tallies.append(tree.leaf_tally)
    assert all(5.0 <= tally <= 20.0 for tally in tallies)
    assert max(tallies) <= 2.0 * min(tallies)
