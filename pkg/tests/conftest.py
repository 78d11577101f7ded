import numpy as np
import pytest

from src.core.config import CoverConfig, QuadratureConfig
from src.fields import FieldFactory, make_singular_solution


@pytest.fixture
def fast_quadrature():
    """Reduced node counts; enough for sign and order-of-magnitude checks."""
    return QuadratureConfig(radial_nodes=16, angular_order=4, estimate_tolerance=False)


@pytest.fixture
def fast_cover():
    return CoverConfig(sample_factor=8, refine_steps=1)


@pytest.fixture
def point_field():
    """v0 with an isolated singularity at the origin, n=5, p=2.5."""
    return make_singular_solution(5, 2.5, 0)


@pytest.fixture
def line_field():
    """Cylindrical solution singular along the first axis, n=6, p=3.5."""
    frame = np.zeros((1, 6))
    frame[0, 0] = 1.0
    return make_singular_solution(6, 3.5, 1, frame=frame)


@pytest.fixture
def zero_field():
    return FieldFactory.create("zero", 5, 2.5)
