"""
Fields package initialization and factory functions.

This module provides factory functions to create fields from parameters or
from their JSON descriptions, the explicit singular solutions, grid
sampling, and the blow-up operator.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..core.exceptions import EnergyNonIntegrable, ValidationError
from .analytic import AffineBumpField, PowerLawField, ZeroField, check_frame, singular_constant
from .base import BaseField, ProblemParams, as_points
from .grid import GridField

logger = logging.getLogger(__name__)


class FieldFactory:
    """Factory class for creating fields."""

    @staticmethod
    def create(kind: str, n: int, p: float, **kwargs) -> BaseField:
        """
        Create and return a field of the requested kind.

        Args:
            kind: 'power_law', 'zero' or 'affine_bump'
            n: Spatial dimension
            p: Nonlinearity exponent
            **kwargs: Kind-specific parameters

        Returns:
            Field instance

        Raises:
            ValidationError: If an unsupported kind is specified
        """
        kind_lower = kind.lower()
        if kind_lower == "power_law":
            return make_singular_solution(
                n, p, kwargs.get("m", 0), kwargs.get("center"), kwargs.get("frame"), c0=kwargs.get("c0")
            )
        elif kind_lower == "zero":
            return ZeroField(ProblemParams(n, p))
        elif kind_lower == "affine_bump":
            return AffineBumpField(
                ProblemParams(n, p),
                a0=kwargs.get("a0", 1.0),
                slope=kwargs.get("slope", np.zeros(n)),
                center=kwargs.get("center", np.zeros(n)),
                sigma=kwargs.get("sigma", 0.5),
            )
        else:
            raise ValidationError("kind", kind, f"one of {FieldFactory.get_supported_kinds()}")

    @staticmethod
    def get_supported_kinds() -> List[str]:
        """
        Get list of supported analytic field kinds.

        Returns:
            List of supported kind strings
        """
        return ["power_law", "zero", "affine_bump"]


def make_singular_solution(
    n: int,
    p: float,
    m: int = 0,
    center: Optional[Sequence[float]] = None,
    frame=None,
    c0: Optional[float] = None,
) -> PowerLawField:
    """
    The cylindrical singular solution c0 |P(x - center)|^{-2/(p-1)}.

    Args:
        n: Spatial dimension
        p: Supercritical exponent
        m: Dimension of the singular plane
        center: Base point of the singular plane (origin by default)
        frame: m orthonormal rows spanning the plane (first m axes by default)
        c0: Override of the solution constant (for wrong-constant controls)

    Returns:
        PowerLawField

    Raises:
        SupercriticalityViolated: p <= (n+2)/(n-2)
        EnergyNonIntegrable: alpha_p >= n - m
        BadFrame: frame not orthonormal
    """
    params = ProblemParams(n, p)
    if m < 0 or m >= n:
        raise ValidationError("m", str(m), f"0 <= m < n={n}")
    # Subsumes n - m - 2 - alpha > 0.
    if params.alpha_p >= n - m:
        raise EnergyNonIntegrable(n, m, params.alpha_p)
    constant = singular_constant(params, m) if c0 is None else float(c0)
    center = np.zeros(n) if center is None else center
    field = PowerLawField(params, constant, center, check_frame(frame, n, m), m)
    logger.debug(f"Built power-law field n={n} p={p} m={m} c0={constant:.15g}")
    return field


def blow_up(u: BaseField, x, r: float) -> BaseField:
    """The rescaled field T_{x,r}u(y) = r^{2/(p-1)} u(x + r y)."""
    return u.blow_up(x, r)


def sample_to_grid(
    u: BaseField,
    origin: Union[float, Sequence[float]],
    side: Union[float, Sequence[float]],
    h: float,
) -> GridField:
    """
    Sample a field at the cell centres of the box [origin, origin + side].

    Cells whose centre lies within h/2 of the singular set receive the capped
    value c0 (h/2)^{-2/(p-1)} and are listed in ``capped_cells``.

    Args:
        u: Analytic field to sample
        origin: Box corner (scalar broadcast to every axis)
        side: Box side length(s)
        h: Cell width

    Returns:
        GridField
    """
    if not h > 0:
        raise ValidationError("h", str(h), "a positive spacing")
    n = u.n
    origin = np.broadcast_to(np.asarray(origin, dtype=float), (n,)).copy()
    side = np.broadcast_to(np.asarray(side, dtype=float), (n,)).copy()
    shape = tuple(int(round(s / h)) for s in side)
    if any(abs(count * h - s) > 1e-9 * max(1.0, s) for count, s in zip(shape, side)):
        logger.warning(f"Box side {side.tolist()} is not a multiple of h={h}; using shape {shape}")

    axes = [origin[d] + h * (np.arange(shape[d]) + 0.5) for d in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    centres = np.stack([m.ravel() for m in mesh], axis=1)

    distance = u.singular_distance(centres)
    capped = distance <= 0.5 * h
    values = np.empty(centres.shape[0])
    if np.any(~capped):
        values[~capped] = u.value(centres[~capped])
    if np.any(capped):
        c0 = getattr(u, "c0", 1.0)
        values[capped] = c0 * (0.5 * h) ** (-u.params.alpha)
        logger.info(f"Capped {int(np.count_nonzero(capped))} cells within h/2 of the singular set")

    return GridField(u.params, origin, h, shape, values, capped_cells=np.flatnonzero(capped).tolist())


def field_to_dict(u: BaseField) -> Dict[str, Any]:
    """JSON description of a field."""
    return u.to_dict()


def field_from_dict(data: Dict[str, Any]) -> BaseField:
    """
    Re-create a field from its JSON description.

    Grid descriptions are recognized by their ``values`` key; analytic ones
    carry a ``kind``.
    """
    if "values" in data:
        return GridField(
            ProblemParams(int(data["n"]), float(data["p"])),
            origin=data["origin"],
            spacing=data["spacing"],
            shape=data["shape"],
            values=data["values"],
            capped_cells=data.get("capped_cells", []),
        )

    kind = data.get("kind")
    if kind is None:
        raise ValidationError("field", "missing kind", "'power_law', 'zero', 'affine_bump' or a grid with 'values'")
    n, p = int(data["n"]), float(data["p"])
    if kind == "power_law":
        m = int(data.get("m", 0))
        frame = data.get("frame") if m > 0 else None
        return make_singular_solution(n, p, m, data.get("center"), frame, c0=data.get("c0"))
    extras = {key: value for key, value in data.items() if key not in ("kind", "n", "p")}
    return FieldFactory.create(kind, n, p, **extras)


# Export commonly used classes and functions
__all__ = [
    'BaseField',
    'ProblemParams',
    'PowerLawField',
    'ZeroField',
    'AffineBumpField',
    'GridField',
    'FieldFactory',
    'as_points',
    'make_singular_solution',
    'blow_up',
    'sample_to_grid',
    'field_to_dict',
    'field_from_dict',
    'singular_constant',
]
