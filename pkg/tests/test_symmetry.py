import numpy as np
import pytest

from src.core.exceptions import OutOfDomain, UnsupportedOrder, ValidationError
from src.density import DensityEvaluator
from src.fields import make_singular_solution, sample_to_grid
from src.symmetry import (
    classify_strata,
    dyadic_scales,
    hsv_symmetric,
    invariance_deficit,
    knp,
    min_invariance_deficit,
    regularity_scale,
    small_gap_scale,
    stratum_membership,
)


def test_knp():
    assert knp(5, 2.5) == 1
    # alpha_p = 4 is an integer here
    assert knp(6, 3.0) == 3
    assert knp(6, 3.5) == 3


def test_dyadic_scales():
    assert dyadic_scales(0.125) == [0.125, 0.25, 0.5]
    with pytest.raises(ValidationError):
        dyadic_scales(0.0)


def test_invariance_deficit_along_singular_line(line_field, fast_quadrature):
    evaluator = DensityEvaluator(line_field, fast_quadrature)
    along = np.zeros((1, 6))
    along[0, 0] = 1.0
    across = np.zeros((1, 6))
    across[0, 1] = 1.0
    x = np.zeros(6)
    assert invariance_deficit(line_field, along, x, 0.1, evaluator=evaluator) == pytest.approx(0.0, abs=1e-12)
    assert invariance_deficit(line_field, across, x, 0.1, evaluator=evaluator) > 0.1


def test_min_invariance_deficit_finds_invariant_direction(line_field, fast_quadrature):
    evaluator = DensityEvaluator(line_field, fast_quadrature)
    value, frame = min_invariance_deficit(line_field, np.zeros(6), 0.1, 1, evaluator=evaluator)
    assert value == pytest.approx(0.0, abs=1e-12)
    assert abs(frame[0, 0]) == pytest.approx(1.0)


def test_point_singularity_is_only_zero_symmetric(point_field, fast_quadrature):
    evaluator = DensityEvaluator(point_field, fast_quadrature)
    assert hsv_symmetric(point_field, np.zeros(5), 0.05, 0, 0.1, evaluator=evaluator).verdict
    assert not hsv_symmetric(point_field, np.zeros(5), 0.05, 1, 1e-3, evaluator=evaluator).verdict


def test_symmetry_mode_validated(point_field):
    with pytest.raises(ValidationError):
        hsv_symmetric(point_field, np.zeros(5), 0.05, 0, 0.1, mode="angular")


def test_singular_point_in_zeroth_stratum(point_field, fast_quadrature):
    evaluator = DensityEvaluator(point_field, fast_quadrature)
    assert stratum_membership(point_field, np.zeros(5), 0, 0.1, 0.0625, evaluator=evaluator)


def test_regular_point_leaves_zeroth_stratum(point_field, fast_quadrature):
    evaluator = DensityEvaluator(point_field, fast_quadrature)
    x = np.array([0.5, 0.0, 0.0, 0.0, 0.0])
    assert not stratum_membership(point_field, x, 0, 0.1, 1.0 / 512.0, evaluator=evaluator)


def test_strata_report_nesting(line_field, fast_quadrature):
    points = [np.zeros(6), np.array([0.3, 0.0, 0.0, 0.0, 0.0, 0.0]), np.array([0.0, 0.5, 0.0, 0.0, 0.0, 0.0])]
    report = classify_strata(line_field, points, 0.1, 1.0 / 256.0, settings=fast_quadrature, regularity_orders=(0,))
    assert report.nesting_holds()
    assert report.stratum_indices[:2] == [1, 1]
    assert report.stratum_indices[2] != 1
    assert report.members(1).shape == (2, 6)
    assert report.regularity[0]["r0"] == 0.0


def test_stratum_index_is_smallest_member_layer(line_field, fast_quadrature):
    points = [np.zeros(6), np.array([0.0, 0.5, 0.0, 0.0, 0.0, 0.0])]
    report = classify_strata(line_field, points, 0.1, 1.0 / 256.0, settings=fast_quadrature, regularity_orders=(0,))
    for index, row in zip(report.stratum_indices, report.memberships):
        if index is None:
            continue
        assert not any(row[:index])
        assert all(member is not False for member in row[index:])
    assert report.stratum_indices[0] == 1
    summary = report.to_dict()
    assert summary["stratum_index"] == report.stratum_indices
    assert summary["stratum_index_rule"].startswith("smallest k")


def test_grid_strata_need_room():
    u = make_singular_solution(3, 7.0, 0, center=[0.05, 0.05, 0.05])
    grid = sample_to_grid(u, -0.5, 1.0, 0.1)
    with pytest.raises(OutOfDomain):
        stratum_membership(grid, np.zeros(3), 0, 0.1, 0.125)


def test_regularity_scale_closed_form(point_field):
    d = 0.5
    ratio = point_field.c0 ** (-1.0 / point_field.params.alpha)
    expected = d * ratio / (1.0 + ratio)
    assert regularity_scale(point_field, [d, 0.0, 0.0, 0.0, 0.0], 0) == pytest.approx(expected, abs=1e-6)


def test_regularity_scale_on_singular_set(point_field):
    assert regularity_scale(point_field, np.zeros(5), 1) == 0.0


def test_regularity_order_limit_on_grids():
    u = make_singular_solution(3, 7.0, 0, center=[0.05, 0.05, 0.05])
    grid = sample_to_grid(u, -0.5, 1.0, 0.1)
    with pytest.raises(UnsupportedOrder):
        regularity_scale(grid, np.zeros(3), 3)
    scale = regularity_scale(grid, [0.3, -0.3, 0.3], 2)
    assert 0.0 <= scale <= 1.0


def test_small_gap_scale_at_singular_point(point_field, fast_quadrature):
    evaluator = DensityEvaluator(point_field, fast_quadrature)
    scale, gap = small_gap_scale(point_field, np.zeros(5), 0.125, evaluator=evaluator)
    assert 0.125 <= scale <= 0.5
    assert gap == pytest.approx(0.0, abs=1e-12)
