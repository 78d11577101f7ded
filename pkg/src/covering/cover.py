"""
The good/bad-ball covering construction.

A ball B_s(x) is processed against an energy level E, the sup of ϑ_s over a
deterministic sample of B_{2s}(x). Its pinch set F collects the sample
points whose density at the small scale ρs/20 stays above E - δ. When F
effectively spans a k-plane L the ball is good: child balls of radius ρs
(never below r) are centred on a lattice of L with spacing ρs/5, so their
1/10 shrinks are disjoint, and children meeting no stratum point are
dropped. Stratum points the lattice misses get children of their own.
Otherwise the ball is bad and becomes a leaf. A child whose sup density
fell below E - δ is labelled energy-drop and, by default, restarts the
construction at its own energy level.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional

import numpy as np
from scipy.spatial import KDTree

from ..core.config import CoverConfig, QuadratureConfig, cover_settings
from ..core.exceptions import CoverageViolation, NonTermination, ValidationError
from ..core.sampling import halton_ball
from ..core.workers import parallel_map
from ..density import DensityEvaluator
from ..fields import BaseField
from ..subspace import AffineSubspace
from ..symmetry import classify_strata
from .span import effective_span, span_subspace

logger = logging.getLogger(__name__)

GOOD = "good"
BAD = "bad"
TERMINAL = "terminal-r"
ENERGY_DROP = "energy-drop"
SHRINK = 0.1


@dataclass
class BallNode:
    """One ball of the cover tree."""
    center: np.ndarray
    radius: float
    label: str
    depth: int
    energy: Optional[float] = None
    pinch_set: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    span_dimension: Optional[int] = None
    subspace: Optional[AffineSubspace] = None
    children: List["BallNode"] = field(default_factory=list)
    orphan: bool = False
    center_density: Optional[float] = None
    restarts: int = 0

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self) -> Iterator["BallNode"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "center": np.asarray(self.center).tolist(),
            "radius": self.radius,
            "label": self.label,
            "depth": self.depth,
            "energy": self.energy,
            "pinch_set": np.asarray(self.pinch_set).tolist(),
            "span_dimension": self.span_dimension,
            "subspace": None if self.subspace is None else self.subspace.to_dict(),
            "orphan": self.orphan,
            "center_density": self.center_density,
            "restarts": self.restarts,
            "children": [child.to_dict() for child in self.children],
        }


@dataclass
class CoverTree:
    """Root parameters, the nested balls and the leaf tally of one cover."""
    parameters: Dict[str, Any]
    roots: List[BallNode]
    stratum_points: np.ndarray
    pinch_violations: int = 0

    def nodes(self) -> Iterator[BallNode]:
        for root in self.roots:
            yield from root.walk()

    @property
    def leaves(self) -> List[BallNode]:
        return [node for node in self.nodes() if node.is_leaf]

    @property
    def leaf_tally(self) -> float:
        """Σ_leaves r_x^k."""
        k = self.parameters["k"]
        return float(sum(leaf.radius ** k for leaf in self.leaves))

    @property
    def packing_ratio(self) -> float:
        """Σ_leaves r_x^k / R^k."""
        return self.leaf_tally / self.parameters["R"] ** self.parameters["k"]

    def label_counts(self) -> Dict[str, int]:
        counts = {label: 0 for label in (GOOD, BAD, TERMINAL, ENERGY_DROP)}
        for leaf in self.leaves:
            counts[leaf.label] += 1
        return counts

    def uncovered(self) -> np.ndarray:
        """Indices of stratum points inside no leaf ball."""
        if self.stratum_points.shape[0] == 0:
            return np.zeros(0, dtype=int)
        leaves = self.leaves
        if not leaves:
            return np.arange(self.stratum_points.shape[0])
        centers = np.asarray([leaf.center for leaf in leaves])
        radii = np.asarray([leaf.radius for leaf in leaves])
        tree = KDTree(centers)
        candidates = tree.query_ball_point(self.stratum_points, float(radii.max()) * (1.0 + 1e-12))
        missing = []
        for i, near in enumerate(candidates):
            gaps = np.linalg.norm(centers[near] - self.stratum_points[i], axis=1) if near else np.zeros(0)
            if not np.any(gaps <= radii[near] * (1.0 + 1e-12)):
                missing.append(i)
        return np.asarray(missing, dtype=int)

    def to_dict(self) -> Dict[str, Any]:
        leaves = self.leaves
        return {
            "parameters": self.parameters,
            "roots": [root.to_dict() for root in self.roots],
            "stratum_points": self.stratum_points.tolist(),
            "leaf_count": len(leaves),
            "leaf_radii": [leaf.radius for leaf in leaves],
            "leaf_labels": self.label_counts(),
            "leaf_tally": self.leaf_tally,
            "packing_ratio": self.packing_ratio,
            "pinch_violations": self.pinch_violations,
        }


def depth_cap(r: float, R: float, rho: float) -> int:
    """⌈log_ρ(r/R)⌉ + 2."""
    return int(math.ceil(math.log(r / R) / math.log(rho) - 1e-12)) + 2


def check_siblings_disjoint(children: List[BallNode]) -> None:
    """Raise CoverageViolation unless the 1/10 shrinks of the siblings are pairwise disjoint."""
    if len(children) < 2:
        return
    centers = np.asarray([child.center for child in children])
    radii = np.asarray([child.radius for child in children])
    tree = KDTree(centers)
    for i, j in sorted(tree.query_pairs(2.0 * SHRINK * float(radii.max()))):
        gap = float(np.linalg.norm(centers[i] - centers[j]))
        if gap < SHRINK * (radii[i] + radii[j]) * (1.0 - 1e-9):
            raise CoverageViolation(
                f"sibling shrinks {i} and {j} overlap",
                technical_details=f"distance {gap:.6g} < {SHRINK * (radii[i] + radii[j]):.6g}",
            )


class _CoverBuilder:
    """Recursive state shared by one build_cover call."""

    def __init__(self, u: BaseField, k: int, r: float, R: float, rho: float, delta: float,
                 stratum: np.ndarray, evaluator: DensityEvaluator, settings: CoverConfig, restart: bool):
        self.u = u
        self.k = k
        self.r = r
        self.rho = rho
        self.delta = delta
        self.stratum = stratum
        self.stratum_tree = KDTree(stratum) if stratum.shape[0] else None
        self.evaluator = evaluator
        self.settings = settings
        self.restart = restart
        self.depth_cap = depth_cap(r, R, rho)
        self.sample_count = settings.sample_factor * 2 ** u.n

    # Sampling

    def ball_sample(self, x: np.ndarray, radius: float, spacing: float) -> np.ndarray:
        """Halton points of B_radius(x) plus the singular skeleton inside it."""
        sample = halton_ball(self.u.n, self.sample_count, x, radius)
        skeleton = self.u.singular_skeleton(x, radius, spacing)
        return np.concatenate([sample, skeleton]) if skeleton.shape[0] else sample

    def sup_density(self, x: np.ndarray, s: float, sample: np.ndarray) -> float:
        """sup ϑ_s over the sample of B_{2s}(x), refined by local grid searches around the maximizer."""
        values = self.evaluator.vartheta_many(sample, s)
        best = int(np.argmax(values))
        point, value = sample[best], float(values[best])
        step = 2.0 * s * self.sample_count ** (-1.0 / self.u.n)
        offsets = np.asarray(list(itertools.product((-1.0, 0.0, 1.0), repeat=self.u.n)))
        for _ in range(self.settings.refine_steps):
            candidates = point + step * offsets
            candidates = candidates[np.linalg.norm(candidates - x, axis=1) <= 2.0 * s]
            local = self.evaluator.vartheta_many(candidates, s)
            index = int(np.argmax(local))
            if local[index] > value:
                point, value = candidates[index], float(local[index])
            step *= 0.5
        return value

    def stratum_in(self, x: np.ndarray, radius: float) -> np.ndarray:
        if self.stratum_tree is None:
            return np.zeros(0, dtype=int)
        return np.asarray(sorted(self.stratum_tree.query_ball_point(x, radius * (1.0 + 1e-12))), dtype=int)

    # Construction

    def child_radius(self, s: float) -> float:
        return max(self.rho * s, self.r)

    def lattice_centers(self, x: np.ndarray, s: float, plane: AffineSubspace, child: float,
                        points: np.ndarray) -> np.ndarray:
        """Lattice points of the plane inside B_s(x), spacing child/5, within child of a stratum point."""
        spacing = 2.0 * SHRINK * child
        frame = plane.frame
        foot = plane.base + (x - plane.base) @ frame.T @ frame
        gap = float(np.linalg.norm(x - foot))
        if gap > s or points.shape[0] == 0:
            return np.zeros((0, self.u.n))
        half = math.sqrt(max(s * s - gap * gap, 0.0))
        if frame.shape[0] == 0:
            reach = np.linalg.norm(points - foot, axis=1) <= child
            return foot[None, :] if np.any(reach) else np.zeros((0, self.u.n))

        reach = int(math.ceil(child / spacing))
        coords = np.rint((points - foot) @ frame.T / spacing).astype(int)
        window = np.asarray(list(itertools.product(range(-reach, reach + 1), repeat=frame.shape[0])))
        candidates = np.unique((coords[:, None, :] + window[None, :, :]).reshape(-1, frame.shape[0]), axis=0)
        offsets = candidates * spacing
        candidates = candidates[np.einsum("ij,ij->i", offsets, offsets) <= half * half]
        centers = foot + (candidates * spacing) @ frame
        if centers.shape[0] == 0:
            return centers
        near = KDTree(points).query_ball_point(centers, child * (1.0 + 1e-12), return_length=True)
        return centers[np.asarray(near) > 0]

    def orphan_centers(self, centers: np.ndarray, child: float, points: np.ndarray) -> np.ndarray:
        """Greedy extra centres, in index order, for stratum points no lattice child reaches."""
        chosen = [c for c in centers]
        extra = []
        for q in points:
            if chosen and float(np.min(np.linalg.norm(np.asarray(chosen) - q, axis=1))) <= child:
                continue
            chosen.append(q)
            extra.append(q)
        return np.asarray(extra).reshape(-1, self.u.n)

    def process(self, node: BallNode, energy: float) -> BallNode:
        """Pinch set, span test and children of an active ball at energy level E."""
        if node.depth > self.depth_cap:
            raise NonTermination(node.depth, self.depth_cap)
        x, s = node.center, node.radius
        node.energy = energy
        sample = self.ball_sample(x, 2.0 * s, self.settings.skeleton_spacing * self.r)
        small = self.rho * s / 20.0
        pinch = sample[self.evaluator.vartheta_many(sample, small) > energy - self.delta]
        node.pinch_set = pinch

        if pinch.shape[0] == 0:
            node.label, node.span_dimension = BAD, -1
            logger.debug(f"Bad ball at {x.tolist()} r={s:.4g}: empty pinch set")
            return node
        dim, basis = effective_span(pinch, small)
        node.span_dimension = dim
        node.subspace = span_subspace(basis[: self.k + 1])
        if dim < self.k:
            node.label = BAD
            logger.debug(f"Bad ball at {x.tolist()} r={s:.4g}: pinch set spans {dim} < {self.k}")
            return node

        node.label = GOOD
        child = self.child_radius(s)
        points = self.stratum[self.stratum_in(x, s)]
        centers = self.lattice_centers(x, s, node.subspace, child, points)
        orphans = self.orphan_centers(centers, child, points)
        children = [BallNode(c, child, TERMINAL, node.depth + 1) for c in centers]
        children += [BallNode(c, child, TERMINAL, node.depth + 1, orphan=True) for c in orphans]
        check_siblings_disjoint(children)
        if node.depth + 1 > self.depth_cap:
            raise NonTermination(node.depth + 1, self.depth_cap)

        for c in children:
            c.center_density = float(self.evaluator.vartheta_many(c.center[None, :], c.radius / 20.0)[0])

        active = [c for c in children if c.radius > self.r * (1.0 + 1e-12)]
        parallel_map(lambda c: self.refine(c, energy, node.restarts), active)
        node.children = children
        logger.debug(f"Good ball at {x.tolist()} r={s:.4g}: {len(centers)} lattice and {len(orphans)} orphan children")
        return node

    def refine(self, node: BallNode, energy: float, restarts: int) -> BallNode:
        """Energy-drop test for a child, then processing at the parent or restarted level."""
        x, s = node.center, node.radius
        sample = self.ball_sample(x, 2.0 * s, self.settings.skeleton_spacing * self.r)
        level = self.sup_density(x, s, sample)
        node.restarts = restarts
        if level > energy - self.delta:
            return self.process(node, energy)
        node.label = ENERGY_DROP
        node.energy = level
        if not self.restart:
            return node
        cap = int(math.ceil(max(energy, 0.0) / self.delta)) + 1
        if restarts + 1 > cap:
            raise NonTermination(restarts + 1, cap, technical_details="energy-drop restarts exhausted")
        node.restarts = restarts + 1
        self.process(node, level)
        if node.label == GOOD:
            node.label = ENERGY_DROP
        return node


def build_cover(
    u: BaseField,
    k: int,
    eps: float,
    r: float,
    R: float,
    rho: Optional[float] = None,
    delta: Optional[float] = None,
    xi: Optional[float] = None,
    x0=None,
    stratum_samples: int = 64,
    evaluator: Optional[DensityEvaluator] = None,
    settings: Optional[QuadratureConfig] = None,
    cover_config: Optional[CoverConfig] = None,
    restart: bool = True,
) -> CoverTree:
    """
    Run the good/bad-ball construction on B_R(x0) down to radius r.

    The stratum sample consists of Halton points of B_R(x0) plus the singular
    skeleton, filtered by membership in the k-th stratum at scale r.

    Args:
        u: Field
        k: Stratum dimension
        eps: Symmetry threshold of the stratum
        r: Terminal radius
        R: Root radius
        rho: Child-to-parent radius ratio (configured default 1/128)
        delta: Energy pinch (eps/4 by default)
        xi: Tolerance for the centre-density property ϑ_{r_x/20}(x) > E - xi (eps/4 by default)
        x0: Root centre (origin by default)
        stratum_samples: Halton points tested for stratum membership
        evaluator: Shared density evaluator
        settings: Quadrature settings for a new evaluator
        cover_config: Covering settings
        restart: Restart energy-drop balls at their own level

    Returns:
        CoverTree

    Raises:
        ValidationError: scales out of order or bad parameters
        OutOfDomain: B_{12R}(x0) leaves the field's domain
        NonTermination: depth or restart cap exceeded
        CoverageViolation: sibling shrinks overlap or a stratum point is uncovered
    """
    if not (0 < r < R <= 1):
        raise ValidationError("r, R", f"r={r}, R={R}", "0 < r < R <= 1 (scales out of order)",
                              technical_details="scales out of order")
    if not 0 <= k <= u.n - 1:
        raise ValidationError("k", str(k), f"0 <= k <= n-1={u.n - 1}")
    if not eps > 0:
        raise ValidationError("eps", str(eps), "a positive threshold")
    cover_config = cover_config or cover_settings()
    rho = cover_config.rho if rho is None else float(rho)
    if not 0 < rho < 0.01:
        raise ValidationError("rho", str(rho), "0 < rho < 1/100")
    delta = eps / 4.0 if delta is None else float(delta)
    xi = eps / 4.0 if xi is None else float(xi)
    if not (delta > 0 and xi > 0):
        raise ValidationError("delta, xi", f"{delta}, {xi}", "positive tolerances")
    x0 = np.zeros(u.n) if x0 is None else np.asarray(x0, dtype=float).reshape(u.n)
    u.require_ball(x0, 12.0 * R)
    evaluator = evaluator or DensityEvaluator(u, settings)

    candidates = halton_ball(u.n, stratum_samples, x0, R)
    skeleton = u.singular_skeleton(x0, R, cover_config.skeleton_spacing * r)
    if skeleton.shape[0]:
        candidates = np.concatenate([candidates, skeleton])
    report = classify_strata(u, candidates, eps, r, k_max=k, evaluator=evaluator, regularity_orders=())
    stratum = report.members(k)
    logger.info(f"Stratum sample: {stratum.shape[0]} of {candidates.shape[0]} candidates in S^{k}")

    parameters = {
        "k": k, "eps": float(eps), "r": float(r), "R": float(R), "rho": rho,
        "delta": delta, "xi": xi, "x0": x0.tolist(),
        "depth_cap": depth_cap(r, R, rho), "sample_count": cover_config.sample_factor * 2 ** u.n,
        "restart": restart,
    }
    if stratum.shape[0] == 0:
        return CoverTree(parameters, [], stratum)

    builder = _CoverBuilder(u, k, r, R, rho, delta, stratum, evaluator, cover_config, restart)
    root = BallNode(x0, float(R), GOOD, 0)
    sample = builder.ball_sample(x0, 2.0 * R, cover_config.skeleton_spacing * r)
    builder.process(root, builder.sup_density(x0, R, sample))

    violations = sum(
        1 for node in root.walk() for child in node.children
        if child.center_density is not None and child.center_density <= node.energy - xi
    )
    tree = CoverTree(parameters, [root], stratum, violations)
    missing = tree.uncovered()
    if missing.size:
        raise CoverageViolation(
            f"{missing.size} stratum points lie in no leaf ball",
            technical_details=f"first uncovered point {stratum[missing[0]].tolist()}",
        )
    logger.info(f"Cover built: {len(tree.leaves)} leaves, tally {tree.leaf_tally:.4g}, labels {tree.label_counts()}")
    return tree
