"""
Tabulated density profiles of homogeneous fields, and the evaluator that
symmetry and covering code use for repeated density queries.

For a power law every scale-normalized quantity at (y, s) depends only on
t = dist(y, Σ)/s (and, for the gradient moment, on the transverse direction
of y). An InvariantProfile samples ϑ and the two gradient-moment
eigenvalues on a logarithmic t grid once per (n, p, m, c0) and interpolates
with PCHIP in log t; beyond the tabulated range the values follow the
far-field power decay. Other fields are evaluated directly.
"""

import logging
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from ..core.cache import density_cache
from ..core.config import QuadratureConfig, quadrature_settings
from ..core.workers import parallel_map
from ..fields import BaseField, PowerLawField, ZeroField
from .energy import gradient_moment_closed_form, gradient_moment_estimate, vartheta_closed_form, vartheta_estimate

logger = logging.getLogger(__name__)

PROFILE_T_MIN = 1e-3
PROFILE_T_MAX = 1e2
PROFILE_POINTS = 40


class InvariantProfile:
    """ϑ(t), g_e(t) and g_⊥(t) for one power-law family."""

    def __init__(self, u: PowerLawField, settings: QuadratureConfig, points: int = PROFILE_POINTS):
        """
        Tabulate the profile.

        Args:
            u: Power-law field; only n, p, m and c0 matter
            settings: Quadrature settings; the tolerance pass is disabled
            points: Number of log-spaced samples in [PROFILE_T_MIN, PROFILE_T_MAX]
        """
        self.u = u
        self.t_grid = np.geomspace(PROFILE_T_MIN, PROFILE_T_MAX, points)
        fast = settings.model_copy(update={"estimate_tolerance": False})

        foot = u.center
        column = int(np.argmax(np.linalg.norm(u.projector, axis=0)))
        direction = u.projector[:, column] / np.linalg.norm(u.projector[:, column])

        def sample(t: float):
            y = foot + t * direction
            vt = float(vartheta_estimate(u, y, 1.0, fast).value)
            moment = np.asarray(gradient_moment_estimate(u, y, 1.0, fast).value)
            along = float(direction @ moment @ direction)
            across = (float(np.trace(u.projector @ moment)) - along) / max(u.n - u.m - 1, 1)
            return vt, along, across

        values = np.asarray(parallel_map(sample, self.t_grid.tolist()))
        self.vartheta_at_zero = vartheta_closed_form(u)
        zero_moment = gradient_moment_closed_form(u)
        self.moment_scalar_at_zero = float(np.trace(zero_moment)) / (u.n - u.m)

        log_t = np.log(self.t_grid)
        self._vartheta = PchipInterpolator(log_t, values[:, 0])
        self._along = PchipInterpolator(log_t, values[:, 1])
        self._across = PchipInterpolator(log_t, values[:, 2])
        self._edge = values[0]
        self._far = values[-1]
        logger.info(f"Tabulated invariant profile for n={u.n} p={u.params.p} m={u.m} on {points} points")

    def _lookup(self, interpolant, edge_value: float, zero_value: float, t: np.ndarray,
                far_value: float, decay: float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        small = t < PROFILE_T_MIN
        out[small] = zero_value + (edge_value - zero_value) * t[small] / PROFILE_T_MIN
        inside = ~small & (t <= PROFILE_T_MAX)
        out[inside] = interpolant(np.log(t[inside]))
        far = t > PROFILE_T_MAX
        # smooth far field: u² terms fall off like t^{-2alpha}, |∇u|² terms like t^{-alpha_p}
        out[far] = far_value * (t[far] / PROFILE_T_MAX) ** (-decay)
        return out

    def vartheta(self, t) -> np.ndarray:
        """ϑ at normalized distance t."""
        return self._lookup(self._vartheta, self._edge[0], self.vartheta_at_zero, t, self._far[0], 2.0 * self.u.params.alpha)

    def moment_eigenvalues(self, t) -> tuple:
        """(g_e, g_⊥): moment eigenvalues along and across the transverse direction."""
        along = self._lookup(self._along, self._edge[1], self.moment_scalar_at_zero, t, self._far[1], self.u.params.alpha_p)
        across = self._lookup(self._across, self._edge[2], self.moment_scalar_at_zero, t, self._far[2], self.u.params.alpha_p)
        return along, across


def get_profile(u: PowerLawField, settings: Optional[QuadratureConfig] = None) -> InvariantProfile:
    """The cached InvariantProfile of u's family."""
    settings = settings or quadrature_settings()
    return density_cache.get_or_compute(
        "profile",
        f"{u.n}:{u.params.p!r}:{u.m}",
        lambda: InvariantProfile(u, settings),
        c0=u.c0,
        radial_nodes=settings.radial_nodes,
        angular_order=settings.angular_order_for(u.n),
    )


class DensityEvaluator:
    """
    Repeated ϑ, W and gradient-moment queries on one field.

    Power laws are answered from their invariant profile; every other field
    is integrated directly.
    """

    def __init__(self, u: BaseField, settings: Optional[QuadratureConfig] = None, use_profile: bool = True):
        self.u = u
        self.settings = settings or quadrature_settings()
        self.profile = get_profile(u, self.settings) if use_profile and isinstance(u, PowerLawField) else None
        self.direct = self.settings.model_copy(update={"estimate_tolerance": False})

    def _normalized_distance(self, y: np.ndarray, s: float) -> float:
        return float(self.u.singular_distance(y)[0]) / s

    def vartheta(self, y, s: float) -> float:
        y = np.asarray(y, dtype=float).reshape(self.u.n)
        if isinstance(self.u, ZeroField):
            self.u.require_ball(y, 10.0 * s)
            return 0.0
        if self.profile is not None:
            return float(self.profile.vartheta(np.array([self._normalized_distance(y, s)]))[0])
        return float(vartheta_estimate(self.u, y, s, self.direct).value)

    def vartheta_many(self, points, s: float) -> np.ndarray:
        """ϑ_s at each row of points."""
        points = np.asarray(points, dtype=float).reshape(-1, self.u.n)
        if self.profile is not None:
            return self.profile.vartheta(self.u.singular_distance(points) / s)
        return np.asarray(parallel_map(lambda y: self.vartheta(y, s), list(points)))

    def density_gap(self, y, s: float) -> float:
        """ϑ_{2s}(y) - ϑ_s(y)."""
        y = np.asarray(y, dtype=float).reshape(self.u.n)
        self.u.require_ball(y, 20.0 * s)
        return self.vartheta(y, 2.0 * s) - self.vartheta(y, s)

    def gradient_moment(self, y, s: float) -> np.ndarray:
        """s^{alpha_p-n} ∫_{B_s(y)} ∇u ⊗ ∇u."""
        y = np.asarray(y, dtype=float).reshape(self.u.n)
        if isinstance(self.u, ZeroField):
            self.u.require_ball(y, s)
            return np.zeros((self.u.n, self.u.n))
        if self.profile is not None:
            t = self._normalized_distance(y, s)
            along, across = self.profile.moment_eigenvalues(np.array([t]))
            projector = self.u.projector
            offset = y - self.u.nearest_singular_point(y)
            norm = float(np.linalg.norm(offset))
            if norm == 0.0:
                return float(along[0]) * projector
            e = offset / norm
            outer = np.outer(e, e)
            return float(along[0]) * outer + float(across[0]) * (projector - outer)
        return np.asarray(gradient_moment_estimate(self.u, y, s, self.direct).value)
