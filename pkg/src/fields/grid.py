"""
Sampled fields on a uniform cell-centred lattice.

Values live at cell centres, row-major. Derivatives come from second-order
central stencils (one-sided second order at the faces); point queries
interpolate those cell-centre arrays linearly.
"""

import hashlib
import logging
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import KDTree

from ..core.exceptions import OutOfDomain, UnsupportedOrder, ValidationError
from .base import BaseField, ProblemParams, as_points

logger = logging.getLogger(__name__)


class GridField(BaseField):
    """
    A field sampled at the cell centres of an axis-aligned box.

    Blow-ups return new GridField objects sharing the sample array; only the
    affine placement and a value scale change.
    """

    kind = "grid"

    def __init__(
        self,
        params: ProblemParams,
        origin: Sequence[float],
        spacing: float,
        shape: Sequence[int],
        values,
        capped_cells: Optional[Sequence[int]] = None,
        value_scale: float = 1.0,
    ):
        super().__init__(params)
        self.origin = np.asarray(origin, dtype=float).reshape(params.n).copy()
        self.spacing = float(spacing)
        self.shape = tuple(int(s) for s in shape)
        if not self.spacing > 0:
            raise ValidationError("spacing", str(spacing), "a positive cell width")
        if len(self.shape) != params.n or any(s < 3 for s in self.shape):
            raise ValidationError("shape", str(self.shape), f"{params.n} cell counts, each >= 3")
        raw = np.asarray(values, dtype=float)
        if raw.size != int(np.prod(self.shape)):
            raise ValidationError("values", f"{raw.size} samples", f"product(shape) = {int(np.prod(self.shape))}")
        self._samples = raw.reshape(self.shape)
        self._samples.setflags(write=False)
        self.capped_cells = sorted(int(i) for i in (capped_cells or []))
        self.value_scale = float(value_scale)

    # Geometry

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.spacing * np.asarray(self.shape, dtype=float)

    @cached_property
    def axes(self) -> List[np.ndarray]:
        """Cell-centre coordinates along each axis."""
        return [self.origin[d] + self.spacing * (np.arange(self.shape[d]) + 0.5) for d in range(self.n)]

    @cached_property
    def capped_mask(self) -> np.ndarray:
        mask = np.zeros(int(np.prod(self.shape)), dtype=bool)
        mask[self.capped_cells] = True
        return mask.reshape(self.shape)

    @cached_property
    def _capped_centers(self) -> np.ndarray:
        if not self.capped_cells:
            return np.zeros((0, self.n))
        idx = np.array(np.unravel_index(self.capped_cells, self.shape)).T
        return self.origin + self.spacing * (idx + 0.5)

    @cached_property
    def _capped_tree(self) -> Optional[KDTree]:
        return KDTree(self._capped_centers) if self.capped_cells else None

    def contains_ball(self, x, radius: float) -> bool:
        x = np.asarray(x, dtype=float).reshape(self.n)
        tol = 1e-12 * max(1.0, float(np.max(np.abs(self.upper))))
        return bool(np.all(x - radius >= self.origin - tol) and np.all(x + radius <= self.upper + tol))

    def domain_description(self) -> str:
        lo = ", ".join(f"{v:.6g}" for v in self.origin)
        hi = ", ".join(f"{v:.6g}" for v in self.upper)
        return f"[({lo}), ({hi})]"

    def cells_in_ball(self, x, radius: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Multi-indices and centres of the cells whose centre lies in B_radius(x).

        Returns:
            (indices (K, n) int array, centres (K, n) float array)
        """
        x = np.asarray(x, dtype=float).reshape(self.n)
        lo = np.floor((x - radius - self.origin) / self.spacing - 0.5).astype(int)
        hi = np.ceil((x + radius - self.origin) / self.spacing - 0.5).astype(int)
        lo = np.clip(lo, 0, np.asarray(self.shape) - 1)
        hi = np.clip(hi, 0, np.asarray(self.shape) - 1)
        ranges = [np.arange(lo[d], hi[d] + 1) for d in range(self.n)]
        mesh = np.meshgrid(*ranges, indexing="ij")
        idx = np.stack([m.ravel() for m in mesh], axis=1)
        centres = self.origin + self.spacing * (idx + 0.5)
        offsets = centres - x
        inside = np.einsum("ij,ij->i", offsets, offsets) <= radius * radius
        return idx[inside], centres[inside]

    # Sample arrays

    @property
    def cell_values(self) -> np.ndarray:
        return self.value_scale * self._samples

    @cached_property
    def cell_gradients(self) -> np.ndarray:
        """∇u at every cell centre, shape shape + (n,)."""
        grads = np.gradient(self._samples, self.spacing, edge_order=2)
        return self.value_scale * np.stack(grads, axis=-1)

    @cached_property
    def cell_hessians(self) -> np.ndarray:
        """D²u at every cell centre from nested central stencils, shape shape + (n, n)."""
        base = self.cell_gradients
        rows = []
        for i in range(self.n):
            second = np.gradient(base[..., i], self.spacing, edge_order=2)
            rows.append(np.stack(second, axis=-1))
        hess = np.stack(rows, axis=-2)
        return 0.5 * (hess + np.swapaxes(hess, -1, -2))

    def _interpolate(self, data: np.ndarray, points) -> np.ndarray:
        pts = as_points(points, self.n)
        interp = RegularGridInterpolator(self.axes, data, method="linear", bounds_error=False, fill_value=None)
        return interp(pts)

    # BaseField interface

    def value(self, points) -> np.ndarray:
        return self._interpolate(self.cell_values, points)

    def gradient(self, points) -> np.ndarray:
        return self._interpolate(self.cell_gradients, points)

    def hessian(self, points) -> np.ndarray:
        return self._interpolate(self.cell_hessians, points)

    def derivative_tensor(self, points, j: int) -> np.ndarray:
        if j > 2:
            raise UnsupportedOrder(j, "grid")
        return super().derivative_tensor(points, j)

    def blow_up(self, x, r: float) -> "GridField":
        if not r > 0:
            raise ValidationError("r", str(r), "a positive scale")
        x = np.asarray(x, dtype=float).reshape(self.n)
        if not self.contains_ball(x, r):
            raise OutOfDomain(x, r, self.domain_description())
        return GridField(
            self.params,
            origin=(self.origin - x) / r,
            spacing=self.spacing / r,
            shape=self.shape,
            values=self._samples,
            capped_cells=self.capped_cells,
            value_scale=self.value_scale * r ** self.params.alpha,
        )

    def singular_distance(self, points) -> np.ndarray:
        pts = as_points(points, self.n)
        if self._capped_tree is None:
            return np.full(pts.shape[0], np.inf)
        dist, _ = self._capped_tree.query(pts)
        return np.asarray(dist, dtype=float)

    def nearest_singular_point(self, point) -> Optional[np.ndarray]:
        if self._capped_tree is None:
            return None
        _, index = self._capped_tree.query(np.asarray(point, dtype=float).reshape(self.n))
        return self._capped_centers[int(index)].copy()

    def singular_skeleton(self, center, radius: float, spacing: float) -> np.ndarray:
        if self._capped_tree is None:
            return np.zeros((0, self.n))
        hits = self._capped_tree.query_ball_point(np.asarray(center, dtype=float).reshape(self.n), radius)
        return self._capped_centers[sorted(hits)].reshape(-1, self.n)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "p": self.params.p,
            "origin": self.origin.tolist(),
            "spacing": self.spacing,
            "shape": list(self.shape),
            "values": self.cell_values.ravel().tolist(),
            "capped_cells": list(self.capped_cells),
        }

    def fingerprint(self) -> str:
        digest = np.round(self.cell_values, 15).tobytes()
        return f"grid:{self.origin.tolist()}:{self.spacing!r}:{self.shape}:{hashlib.sha256(digest).hexdigest()[:16]}"
