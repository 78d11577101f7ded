"""
Best-fit affine subspaces and the k-dimensional displacement of a measure.

The displacement r^{-k-2} min_L ∫_{B_r(x)} dist²(y, L) dμ is attained at
L_k = x_cm + span(v_1..v_k), the top-k eigenvectors of the second moment
about the centre of mass, with value r^{-k-2} Σ_{i>k} λ_i.
"""

import logging
import math
from typing import Tuple

import numpy as np
from scipy.linalg import subspace_angles

from ..core.exceptions import DimensionMismatch, EmptyRestriction, ValidationError
from .jacobi import jacobi_eigh
from .measure import AffineSubspace, DiscreteMeasure, MomentSpectrum

logger = logging.getLogger(__name__)


def moment_spectrum(mu: DiscreteMeasure, x, r: float) -> MomentSpectrum:
    """
    Centre of mass and second-moment spectrum of μ restricted to B_r(x).

    Raises:
        EmptyRestriction: no positive mass in B_r(x)
    """
    x = np.asarray(x, dtype=float).reshape(mu.n)
    local = mu.restrict(x, r)
    mass = local.total_mass
    if not mass > 0:
        raise EmptyRestriction(x, r)

    x_cm = local.weights @ local.points / mass
    offsets = local.points - x_cm
    moment = (offsets * local.weights[:, None]).T @ offsets
    eigenvalues, eigenvectors, sweeps = jacobi_eigh(moment)
    logger.debug(f"Moment spectrum of {len(local)} atoms: {sweeps} Jacobi sweeps")
    return MomentSpectrum(x_cm, eigenvalues, eigenvectors, mass, moment, sweeps)


def _check_k(k: int, n: int) -> None:
    if not 0 <= k <= n:
        raise ValidationError("k", str(k), f"0 <= k <= n={n}")


def displacement(mu: DiscreteMeasure, x, r: float, k: int) -> Tuple[float, AffineSubspace]:
    """
    r^{-k-2} Σ_{i>k} λ_i and its minimizer L_k.

    Raises:
        EmptyRestriction: no positive mass in B_r(x)
    """
    _check_k(k, mu.n)
    spectrum = moment_spectrum(mu, x, r)
    value = max(spectrum.tail_sum(k), 0.0) * r ** (-k - 2)
    return value, spectrum.subspace(k)


def _frame_objective(frames: np.ndarray, offsets: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Σ_j w_j dist²(y_j, base + span F_c) for a stack of frames (C, k, n)."""
    total = float(weights @ np.einsum("ij,ij->i", offsets, offsets))
    along = np.einsum("ckn,jn->cjk", frames, offsets)
    return total - np.einsum("cjk,j->c", along * along, weights)


def _orthonormal_frames(raw: np.ndarray) -> np.ndarray:
    """Orthonormalize each (k, n) slice of raw by QR of its transpose."""
    q, _ = np.linalg.qr(np.transpose(raw, (0, 2, 1)))
    return np.transpose(q, (0, 2, 1))


def _angular_frames(n: int, k: int) -> np.ndarray:
    """Deterministic frame grid for n <= 3."""
    if n == 2 and k == 1:
        angles = np.arange(720) * (math.pi / 720)
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)[:, None, :]
    if n == 3 and k in (1, 2):
        polar = (np.arange(90) + 0.5) * (math.pi / 180)
        azimuth = np.arange(180) * (2 * math.pi / 180)
        pp, aa = np.meshgrid(polar, azimuth, indexing="ij")
        directions = np.stack([np.sin(pp) * np.cos(aa), np.sin(pp) * np.sin(aa), np.cos(pp)], axis=-1).reshape(-1, 3)
        if k == 1:
            return directions[:, None, :]
        complements = []
        for normal in directions:
            q, _ = np.linalg.qr(np.column_stack([normal, np.eye(3)]))
            complements.append(q[:, 1:3].T)
        return np.asarray(complements)
    return np.zeros((0, k, n))


def displacement_bruteforce(
    mu: DiscreteMeasure,
    x,
    r: float,
    k: int,
    trials: int = 2000,
    seed: int = 0,
    refine_steps: int = 400,
) -> float:
    """
    Minimum of r^{-k-2} ∫ dist² over sampled affine k-planes.

    Frames come from orthonormalized Gaussian samples plus an angular grid
    for n <= 3, followed by a shrinking random local search around the
    best frame; bases are the exact centre of mass and perturbations of it.

    Raises:
        EmptyRestriction: no positive mass in B_r(x)
    """
    _check_k(k, mu.n)
    x = np.asarray(x, dtype=float).reshape(mu.n)
    local = mu.restrict(x, r)
    if not local.total_mass > 0:
        raise EmptyRestriction(x, r)
    n = mu.n
    if k == n:
        return 0.0

    rng = np.random.default_rng(seed)
    x_cm = local.center_of_mass()
    bases = [x_cm] + [x_cm + 0.01 * r * rng.standard_normal(n) for _ in range(8)]
    weights = local.weights

    if k == 0:
        values = [float(weights @ np.sum((local.points - b) ** 2, axis=1)) for b in bases]
        return min(values) * r ** -2.0

    frames = _orthonormal_frames(rng.standard_normal((trials, k, n)))
    grid = _angular_frames(n, k)
    if grid.shape[0]:
        frames = np.concatenate([frames, grid])

    offsets = local.points - x_cm
    objective = _frame_objective(frames, offsets, weights)
    best_index = int(np.argmin(objective))
    best, best_value = frames[best_index], float(objective[best_index])

    step, stale = 0.1, 0
    for _ in range(refine_steps):
        candidate = _orthonormal_frames((best + step * rng.standard_normal((k, n)))[None])[0]
        value = float(_frame_objective(candidate[None], offsets, weights)[0])
        if value < best_value:
            best, best_value, stale = candidate, value, 0
        else:
            stale += 1
            if stale >= 20:
                step, stale = 0.5 * step, 0

    for base in bases[1:]:
        value = float(_frame_objective(best[None], local.points - base, weights)[0])
        best_value = min(best_value, value)
    return max(best_value, 0.0) * r ** (-k - 2)


def subspace_distance(V: AffineSubspace, W: AffineSubspace, affine: bool = True) -> float:
    """
    sqrt(Σ θ_i²) over the principal angles between the linear parts, plus
    (affine mode) the offset of W's base orthogonal to V.

    Raises:
        DimensionMismatch: different k or ambient dimension
    """
    if V.k != W.k:
        raise DimensionMismatch("subspace dimension", V.k, W.k)
    if V.n != W.n:
        raise DimensionMismatch("ambient dimension", V.n, W.n)
    angular = 0.0
    if V.k:
        angles = subspace_angles(V.frame.T, W.frame.T)
        angular = float(np.sqrt(np.sum(angles ** 2)))
    if not affine:
        return angular
    offset = V.orthogonal_projector() @ (W.base - V.base)
    return angular + float(np.linalg.norm(offset))
