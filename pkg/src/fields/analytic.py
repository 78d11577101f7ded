"""
Closed-form fields: the cylindrical power-law singular solutions, the zero
field, and a Gaussian-damped affine bump used as a smooth negative control.
"""

import itertools
import logging
import math
from typing import Any, Dict, Optional

import numpy as np

from ..core.exceptions import BadFrame, EnergyNonIntegrable, ValidationError
from .base import BaseField, ProblemParams, as_points

logger = logging.getLogger(__name__)


def singular_constant(params: ProblemParams, m: int) -> float:
    """c0 with c0^{p-1} = alpha (n - m - 2 - alpha)."""
    alpha = params.alpha
    base = alpha * (params.n - m - 2 - alpha)
    if base <= 0:
        raise EnergyNonIntegrable(params.n, m, params.alpha_p)
    return base ** (1.0 / (params.p - 1.0))


def check_frame(frame, n: int, m: int) -> np.ndarray:
    """Validate an m-frame given as m row vectors of length n."""
    if m == 0:
        if frame is not None and np.asarray(frame, dtype=float).size:
            raise BadFrame("m=0 takes an empty frame")
        return np.zeros((0, n))
    if frame is None:
        return np.eye(n)[:m].copy()
    arr = np.asarray(frame, dtype=float)
    if arr.ndim != 2 or arr.shape != (m, n):
        raise BadFrame(f"expected shape ({m}, {n}), got {arr.shape}")
    gram = arr @ arr.T
    error = float(np.max(np.abs(gram - np.eye(m))))
    if error > 1e-10:
        raise BadFrame("rows are not orthonormal", technical_details=f"max |F F^T - I| = {error:.3e}")
    return arr.copy()


class PowerLawField(BaseField):
    """
    u(y) = c0 |P(y - center)|^{-alpha}, with P the projection onto the
    orthogonal complement of an m-frame.

    The singular set is the m-plane center + span(frame). With the solution
    constant the field solves the equation off that plane; other constants
    give the wrong-constant control fields.
    """

    kind = "power_law"

    def __init__(self, params: ProblemParams, c0: float, center, frame, m: int):
        super().__init__(params)
        if not 0 <= m < params.n:
            raise ValidationError("m", str(m), f"0 <= m < n={params.n}")
        if params.alpha_p >= params.n - m:
            raise EnergyNonIntegrable(params.n, m, params.alpha_p)
        self.m = m
        self.c0 = float(c0)
        self.center = np.asarray(center, dtype=float).reshape(params.n).copy()
        self.frame = check_frame(frame, params.n, m)
        self.projector = np.eye(params.n) - self.frame.T @ self.frame

    @property
    def is_homogeneous(self) -> bool:
        return True

    @property
    def solution_constant(self) -> float:
        return singular_constant(self.params, self.m)

    def _transverse(self, points):
        pts = as_points(points, self.n)
        offsets = pts - self.center
        along = offsets @ self.frame.T
        transverse = offsets - along @ self.frame
        return transverse, np.einsum("ij,ij->i", transverse, transverse)

    def value(self, points) -> np.ndarray:
        _, sq = self._transverse(points)
        with np.errstate(divide="ignore"):
            return self.c0 * sq ** (-self.params.alpha / 2.0)

    def gradient(self, points) -> np.ndarray:
        transverse, sq = self._transverse(points)
        alpha = self.params.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            coeff = -alpha * self.c0 * sq ** (-alpha / 2.0 - 1.0)
        return coeff[:, None] * transverse

    def hessian(self, points) -> np.ndarray:
        transverse, sq = self._transverse(points)
        alpha = self.params.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            coeff = alpha * self.c0 * sq ** (-alpha / 2.0 - 1.0)
            outer = np.einsum("ij,ik->ijk", transverse, transverse) / sq[:, None, None]
        return coeff[:, None, None] * ((alpha + 2.0) * outer - self.projector[None, :, :])

    def laplacian(self, points) -> np.ndarray:
        """Closed form -alpha c0 (n - m - 2 - alpha) |Pd|^{-alpha-2}."""
        _, sq = self._transverse(points)
        alpha = self.params.alpha
        with np.errstate(divide="ignore"):
            return -alpha * self.c0 * (self.n - self.m - 2 - alpha) * sq ** (-alpha / 2.0 - 1.0)

    def pde_residual(self, points) -> np.ndarray:
        """Pointwise -Δu - |u|^{p-1}u with Δu taken as the trace of the exact Hessian."""
        u = self.value(points)
        lap = np.trace(self.hessian(points), axis1=1, axis2=2)
        return -lap - np.abs(u) ** (self.params.p - 1.0) * u

    def blow_up(self, x, r: float) -> "PowerLawField":
        if not r > 0:
            raise ValidationError("r", str(r), "a positive scale")
        x = np.asarray(x, dtype=float).reshape(self.n)
        return PowerLawField(self.params, self.c0, (self.center - x) / r, self.frame, self.m)

    def singular_distance(self, points) -> np.ndarray:
        _, sq = self._transverse(points)
        return np.sqrt(sq)

    def nearest_singular_point(self, point) -> Optional[np.ndarray]:
        transverse, _ = self._transverse(point)
        return np.asarray(point, dtype=float).reshape(self.n) - transverse[0]

    def singular_skeleton(self, center, radius: float, spacing: float) -> np.ndarray:
        center = np.asarray(center, dtype=float).reshape(self.n)
        foot = self.nearest_singular_point(center)
        gap = float(np.linalg.norm(center - foot))
        if gap > radius:
            return np.zeros((0, self.n))
        if self.m == 0:
            return foot[None, :]

        half = math.sqrt(max(radius * radius - gap * gap, 0.0))
        steps = int(math.floor(half / spacing))
        offsets = np.arange(-steps, steps + 1) * spacing
        points = []
        for coeffs in itertools.product(offsets, repeat=self.m):
            coeffs = np.asarray(coeffs)
            if float(coeffs @ coeffs) <= half * half:
                points.append(foot + coeffs @ self.frame)
        return np.asarray(points).reshape(-1, self.n)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "n": self.n,
            "p": self.params.p,
            "m": self.m,
            "c0": self.c0,
            "center": self.center.tolist(),
            "frame": self.frame.tolist(),
        }


class ZeroField(BaseField):
    """The trivial solution u ≡ 0."""

    kind = "zero"

    def value(self, points) -> np.ndarray:
        return np.zeros(as_points(points, self.n).shape[0])

    def gradient(self, points) -> np.ndarray:
        return np.zeros_like(as_points(points, self.n))

    def hessian(self, points) -> np.ndarray:
        count = as_points(points, self.n).shape[0]
        return np.zeros((count, self.n, self.n))

    def derivative_tensor(self, points, j: int) -> np.ndarray:
        count = as_points(points, self.n).shape[0]
        return np.zeros((count,) + (self.n,) * j)

    def blow_up(self, x, r: float) -> "ZeroField":
        if not r > 0:
            raise ValidationError("r", str(r), "a positive scale")
        return ZeroField(self.params)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "n": self.n, "p": self.params.p}


class AffineBumpField(BaseField):
    """
    u(y) = (a0 + b·d) exp(-|d|²/(2 sigma²)) with d = y - center.

    Smooth, bounded and not a solution; used as a negative control.
    """

    kind = "affine_bump"

    def __init__(self, params: ProblemParams, a0: float, slope, center, sigma: float):
        super().__init__(params)
        if not sigma > 0:
            raise ValidationError("sigma", str(sigma), "a positive width")
        self.a0 = float(a0)
        self.slope = np.asarray(slope, dtype=float).reshape(params.n).copy()
        self.center = np.asarray(center, dtype=float).reshape(params.n).copy()
        self.sigma = float(sigma)

    def _parts(self, points):
        offsets = as_points(points, self.n) - self.center
        linear = self.a0 + offsets @ self.slope
        gauss = np.exp(-np.einsum("ij,ij->i", offsets, offsets) / (2.0 * self.sigma ** 2))
        return offsets, linear, gauss

    def value(self, points) -> np.ndarray:
        _, linear, gauss = self._parts(points)
        return linear * gauss

    def gradient(self, points) -> np.ndarray:
        offsets, linear, gauss = self._parts(points)
        s2 = self.sigma ** 2
        return gauss[:, None] * (self.slope[None, :] - linear[:, None] * offsets / s2)

    def hessian(self, points) -> np.ndarray:
        offsets, linear, gauss = self._parts(points)
        s2 = self.sigma ** 2
        cross = np.einsum("j,ik->ijk", self.slope, offsets)
        cross = cross + np.transpose(cross, (0, 2, 1))
        outer = np.einsum("ij,ik->ijk", offsets, offsets)
        eye = np.eye(self.n)[None, :, :]
        return gauss[:, None, None] * (
            -cross / s2 + linear[:, None, None] * outer / s2 ** 2 - linear[:, None, None] * eye / s2
        )

    def blow_up(self, x, r: float) -> "AffineBumpField":
        if not r > 0:
            raise ValidationError("r", str(r), "a positive scale")
        x = np.asarray(x, dtype=float).reshape(self.n)
        alpha = self.params.alpha
        return AffineBumpField(
            self.params,
            a0=r ** alpha * self.a0,
            slope=r ** (alpha + 1.0) * self.slope,
            center=(self.center - x) / r,
            sigma=self.sigma / r,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "n": self.n,
            "p": self.params.p,
            "a0": self.a0,
            "slope": self.slope.tolist(),
            "center": self.center.tolist(),
            "sigma": self.sigma,
        }
