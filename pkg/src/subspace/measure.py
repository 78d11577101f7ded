"""
Weighted atomic measures, affine subspaces and second-moment spectra.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, Optional

import numpy as np
from scipy.spatial import KDTree

from ..core.exceptions import BadFrame, DimensionMismatch, EmptyRestriction, ValidationError

logger = logging.getLogger(__name__)


class DiscreteMeasure:
    """
    A finite weighted point set standing in for a Radon measure.

    Immutable; the KD-tree used for ball queries is built lazily.
    """

    def __init__(self, points, weights=None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :] if pts.size else pts.reshape(0, 0)
        if pts.ndim != 2:
            raise ValidationError("points", str(pts.shape), "an (N, n) array")
        w = np.ones(pts.shape[0]) if weights is None else np.asarray(weights, dtype=float).ravel()
        if w.shape[0] != pts.shape[0]:
            raise DimensionMismatch("weights", str(pts.shape[0]), str(w.shape[0]))
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationError("weights", "negative or non-finite entries", "finite nonnegative weights")
        self.points = pts
        self.weights = w
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @cached_property
    def tree(self) -> KDTree:
        return KDTree(self.points)

    def ball_indices(self, x, r: float) -> np.ndarray:
        """Sorted indices of the atoms in the closed ball B_r(x)."""
        if len(self) == 0:
            return np.zeros(0, dtype=int)
        hits = self.tree.query_ball_point(np.asarray(x, dtype=float).reshape(self.n), r)
        return np.asarray(sorted(hits), dtype=int)

    def mass_in_ball(self, x, r: float) -> float:
        return float(np.sum(self.weights[self.ball_indices(x, r)]))

    def restrict(self, x, r: float) -> "DiscreteMeasure":
        """μ restricted to B_r(x)."""
        idx = self.ball_indices(x, r)
        return DiscreteMeasure(self.points[idx].reshape(-1, self.n), self.weights[idx])

    def center_of_mass(self) -> np.ndarray:
        mass = self.total_mass
        if not mass > 0:
            raise EmptyRestriction(np.zeros(self.n), 0.0)
        return self.weights @ self.points / mass

    def transformed(self, rotation: np.ndarray, shift: np.ndarray) -> "DiscreteMeasure":
        """Image under y ↦ rotation @ y + shift."""
        return DiscreteMeasure(self.points @ np.asarray(rotation).T + np.asarray(shift), self.weights)

    def to_dict(self) -> Dict[str, Any]:
        return {"points": self.points.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DiscreteMeasure":
        if "points" not in data:
            raise ValidationError("measure", "missing points", "{'points': [[...]], 'weights': [...]}")
        return cls(data["points"], data.get("weights"))


@dataclass(frozen=True)
class AffineSubspace:
    """base + span(frame rows); k = 0 is the single point ``base``."""
    base: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float).ravel()
        frame = np.asarray(self.frame, dtype=float).reshape(-1, base.size)
        if frame.shape[0]:
            error = float(np.max(np.abs(frame @ frame.T - np.eye(frame.shape[0]))))
            if error > 1e-10:
                raise BadFrame("subspace frame rows are not orthonormal", technical_details=f"max |F F^T - I| = {error:.3e}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "frame", frame)

    @property
    def k(self) -> int:
        return self.frame.shape[0]

    @property
    def n(self) -> int:
        return self.base.size

    def squared_distance(self, points) -> np.ndarray:
        d = np.asarray(points, dtype=float).reshape(-1, self.n) - self.base
        along = d @ self.frame.T
        return np.maximum(np.einsum("ij,ij->i", d, d) - np.einsum("ij,ij->i", along, along), 0.0)

    def distance(self, points) -> np.ndarray:
        return np.sqrt(self.squared_distance(points))

    def orthogonal_projector(self) -> np.ndarray:
        return np.eye(self.n) - self.frame.T @ self.frame

    def to_dict(self) -> Dict[str, Any]:
        return {"base": self.base.tolist(), "frame": self.frame.tolist(), "k": self.k}


@dataclass(frozen=True)
class MomentSpectrum:
    """Centre of mass and descending eigen-decomposition of the second moment about it."""
    x_cm: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mass: float
    moment: np.ndarray
    sweeps: int = 0

    def subspace(self, k: int) -> AffineSubspace:
        """L_k = x_cm + span(v_1, ..., v_k)."""
        if not 0 <= k <= self.x_cm.size:
            raise ValidationError("k", str(k), f"0 <= k <= {self.x_cm.size}")
        return AffineSubspace(self.x_cm, self.eigenvectors[:, :k].T)

    def tail_sum(self, k: int) -> float:
        """Σ_{i>k} λ_i."""
        return float(np.sum(self.eigenvalues[k:]))

    def eigen_residual(self) -> float:
        """max_i |M v_i - λ_i v_i|."""
        residual = self.moment @ self.eigenvectors - self.eigenvectors * self.eigenvalues[None, :]
        return float(np.max(np.linalg.norm(residual, axis=0))) if residual.size else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x_cm": self.x_cm.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenvectors": self.eigenvectors.T.tolist(),
            "mass": self.mass,
            "eigen_residual": self.eigen_residual(),
        }


def measure_from_file_data(data: Dict[str, Any], expected_n: Optional[int] = None) -> DiscreteMeasure:
    """Build a measure from parsed JSON, checking its dimension."""
    measure = DiscreteMeasure.from_dict(data)
    if expected_n is not None and len(measure) and measure.n != expected_n:
        raise DimensionMismatch("measure points", str(expected_n), str(measure.n))
    return measure
