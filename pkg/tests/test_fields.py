import math

import numpy as np
import pytest

from src.core.exceptions import BadFrame, EnergyNonIntegrable, OutOfDomain, SupercriticalityViolated, ValidationError
from src.core.sampling import halton_ball
from src.fields import (
    FieldFactory,
    GridField,
    PowerLawField,
    ProblemParams,
    blow_up,
    field_from_dict,
    make_singular_solution,
    sample_to_grid,
)


def test_singular_constants():
    assert make_singular_solution(5, 2.5, 0).c0 == pytest.approx((20.0 / 9.0) ** (2.0 / 3.0), rel=1e-12)
    assert make_singular_solution(6, 3.0, 1).c0 == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_scaling_indices():
    params = ProblemParams(5, 2.5)
    assert params.alpha == pytest.approx(4.0 / 3.0)
    assert params.alpha_p == pytest.approx(14.0 / 3.0)


def test_subcritical_exponent_rejected():
    with pytest.raises(SupercriticalityViolated):
        ProblemParams(5, 2.0)


def test_energy_non_integrable_plane_rejected():
    # alpha_p = 4 for p = 3, so m = 2 leaves n - m = 4
    with pytest.raises(EnergyNonIntegrable):
        make_singular_solution(6, 3.0, 2)


def test_non_orthonormal_frame_rejected():
    with pytest.raises(BadFrame):
        make_singular_solution(6, 3.0, 1, frame=[[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]])


@pytest.mark.parametrize("n, p, m", [(5, 2.5, 0), (6, 3.0, 1), (6, 3.5, 1)])
def test_pointwise_residual_vanishes(n, p, m):
    u = make_singular_solution(n, p, m)
    candidates = halton_ball(n, 400)
    points = candidates[u.singular_distance(candidates) > 0.05][:100]
    residual = np.abs(u.pde_residual(points))
    scale = np.abs(u.laplacian(points))
    assert np.max(residual / scale) < 1e-10


def test_wrong_constant_leaves_residual():
    u = make_singular_solution(5, 2.5, 0, c0=1.0)
    points = halton_ball(5, 50, center=[0.5, 0, 0, 0, 0], radius=0.2)
    assert np.min(np.abs(u.pde_residual(points))) > 1e-3


def test_blow_up_of_centered_power_law_is_itself(point_field):
    scaled = blow_up(point_field, np.zeros(5), 0.25)
    points = halton_ball(5, 20, center=[0.3, 0, 0, 0, 0], radius=0.1)
    assert np.allclose(scaled.value(points), point_field.value(points), rtol=1e-12)


def test_blow_up_moves_singular_set(line_field):
    x = np.array([0.0, 0.2, 0.0, 0.0, 0.0, 0.0])
    scaled = line_field.blow_up(x, 0.5)
    assert scaled.singular_distance(np.zeros(6))[0] == pytest.approx(0.4)


def test_factory_unknown_kind():
    with pytest.raises(ValidationError):
        FieldFactory.create("dipole", 5, 2.5)


def test_field_description_round_trip(line_field):
    rebuilt = field_from_dict(line_field.to_dict())
    assert isinstance(rebuilt, PowerLawField)
    assert rebuilt.c0 == line_field.c0
    assert rebuilt.m == 1


def test_sample_to_grid_caps_singular_cell():
    u = make_singular_solution(3, 7.0, 0)
    grid = sample_to_grid(u, -0.625, 1.25, 0.25)
    assert grid.shape == (5, 5, 5)
    assert len(grid.capped_cells) == 1
    capped_value = grid.cell_values.ravel()[grid.capped_cells[0]]
    assert capped_value == pytest.approx(u.c0 * 0.125 ** (-u.params.alpha))
    assert grid.singular_distance(np.zeros(3))[0] == pytest.approx(0.0)


def test_grid_round_trip_and_domain():
    u = make_singular_solution(3, 7.0, 0)
    grid = sample_to_grid(u, -0.625, 1.25, 0.25)
    rebuilt = field_from_dict(grid.to_dict())
    assert isinstance(rebuilt, GridField)
    assert rebuilt.fingerprint() == grid.fingerprint()
    with pytest.raises(OutOfDomain):
        grid.require_ball(np.zeros(3), 2.0)


def test_zero_field_derivatives(zero_field):
    points = halton_ball(5, 10)
    assert np.all(zero_field.derivative_norm(points, 2) == 0.0)


def test_sample_to_grid_cell_values(point_field):
    grid = sample_to_grid(point_field, -1.0, 2.0, 0.25)
    assert grid.shape == (8,) * 5
    assert grid.cell_values.shape == (8,) * 5
    assert grid.capped_cells == []
    expected = point_field.c0 * (5.0 / 64.0) ** (-2.0 / 3.0)
    assert grid.cell_values[4, 4, 4, 4, 4] == pytest.approx(expected, rel=1e-12)


def test_sample_to_grid_of_zero_field(zero_field):
    grid = sample_to_grid(zero_field, 0.0, 1.0, 0.125)
    assert grid.shape == (8,) * 5
    assert np.all(grid.cell_values == 0.0)
