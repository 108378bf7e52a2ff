"""Binary-leaf decomposition and exact 2D polygon extraction.

A hybrid zonotope with n_b binary factors is the union of at most 2^n_b
constrained zonotopes, one per feasible binary assignment. Enumeration walks
the assignment tree depth-first, pruning any subtree whose LP relaxation is
already infeasible, so the work scales with the number of feasible leaves
rather than 2^n_b. Each leaf's 2D projection is a convex polygon recovered
exactly (up to an angular tolerance) by an adaptive support-function sweep:
every polygon vertex is the optimizer of some direction's LP, and arcs are
bisected until the inserted vertex sits on the chord.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import hz as hzm
from .errors import DimensionMismatchError, LeafCapError, SolverError
from .hz import HybridZonotope
from .lp import DEFAULT_OPTIONS, LpProblem, SimplexOptions, solve_lp
from .milp import STRICT_TOL

__all__ = [
    "BinaryLeaf",
    "PolygonSet",
    "enumerate_leaves",
    "leaf_region",
    "project_leaf_polygon",
    "hz_to_polygons",
    "polygon_area",
    "convex_hull_2d",
    "point_in_polygon",
    "DEFAULT_LEAF_CAP",
    "DEFAULT_ANGULAR_TOL",
]

DEFAULT_LEAF_CAP = 25
DEFAULT_ANGULAR_TOL = 1e-4


@dataclass(frozen=True)
class BinaryLeaf:
    """One feasible binary assignment and its induced constrained zonotope."""

    assignment: np.ndarray
    region: HybridZonotope


@dataclass(frozen=True)
class PolygonSet:
    """Per-leaf polygons of a 2D projection; overlaps are not merged."""

    plane: np.ndarray
    polygons: tuple
    leaf_assignments: tuple

    def to_dict(self) -> dict:
        return {
            "plane": np.asarray(self.plane).tolist(),
            "polygons": [np.asarray(p).tolist() for p in self.polygons],
            "leaf_assignments": [np.asarray(a).tolist() for a in self.leaf_assignments],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolygonSet":
        return cls(
            plane=np.asarray(data["plane"], dtype=float),
            polygons=tuple(np.asarray(p, dtype=float).reshape(-1, 2)
                           for p in data["polygons"]),
            leaf_assignments=tuple(np.asarray(a, dtype=float)
                                   for a in data["leaf_assignments"]),
        )


def leaf_region(z: HybridZonotope, assignment) -> HybridZonotope:
    """Constrained zonotope obtained by substituting one binary assignment."""
    xb = np.asarray(assignment, dtype=float).reshape(-1)
    if xb.shape[0] != z.n_b:
        raise DimensionMismatchError(
            f"assignment length ({xb.shape[0]}) != binary generators ({z.n_b})")
    return hzm.make_hz(
        z.center + z.gen_bin @ xb,
        z.gen_cont,
        None,
        z.con_cont if z.n_c else None,
        None,
        (z.con_rhs - z.con_bin @ xb) if z.n_c else None,
    )


def _prefix_feasible(z: HybridZonotope, fixed: np.ndarray, n_fixed: int,
                     options: SimplexOptions) -> bool:
    """LP relaxation with the first ``n_fixed`` binaries pinned."""
    n_g, n_b = z.n_g, z.n_b
    lower = np.concatenate([np.full(n_g, -(1.0 + STRICT_TOL)), np.full(n_b, -1.0)])
    upper = np.concatenate([np.full(n_g, 1.0 + STRICT_TOL), np.full(n_b, 1.0)])
    lower[n_g:n_g + n_fixed] = fixed[:n_fixed]
    upper[n_g:n_g + n_fixed] = fixed[:n_fixed]
    eq = np.hstack([z.con_cont, z.con_bin]) if z.n_c else np.zeros((0, n_g + n_b))
    res = solve_lp(LpProblem(np.zeros(n_g + n_b), eq, z.con_rhs, lower, upper),
                   options)
    if res.status == "unbounded":
        raise SolverError("feasibility relaxation reported unbounded")
    return res.status == "optimal"


def enumerate_leaves(z: HybridZonotope, *, cap: int = DEFAULT_LEAF_CAP,
                     options: SimplexOptions = DEFAULT_OPTIONS) -> list:
    """All feasible binary assignments of Z, each with its region.

    Depth-first over assignment prefixes in index order, value -1 before +1;
    a prefix whose LP relaxation is infeasible prunes its whole subtree, and
    every returned leaf is certified feasible by its own LP. Sets with more
    than ``cap`` binaries are refused: enumeration output is exponential in
    the worst case, so query emptiness/membership MILPs directly or sample
    leaf patterns from trajectories instead.
    """
    if z.n_b > cap:
        raise LeafCapError(
            f"set has {z.n_b} binary factors (cap {cap}); leaf enumeration "
            "would be exponential in the worst case. Use the emptiness/"
            "membership MILP queries or trajectory-guided pattern sampling.")
    if not _prefix_feasible(z, np.zeros(z.n_b), 0, options):
        return []
    if z.n_b == 0:
        return [BinaryLeaf(np.zeros(0), leaf_region(z, np.zeros(0)))]

    leaves = []
    stack = [(np.zeros(z.n_b), 0)]
    while stack:
        fixed, depth = stack.pop()
        if depth == z.n_b:
            leaves.append(BinaryLeaf(fixed.copy(), leaf_region(z, fixed)))
            continue
        for value in (1.0, -1.0):  # popped -1 first
            child = fixed.copy()
            child[depth] = value
            if _prefix_feasible(z, child, depth + 1, options):
                stack.append((child, depth + 1))
    leaves.sort(key=lambda leaf: tuple(leaf.assignment))
    return leaves


def _support_point(region: HybridZonotope, q: np.ndarray,
                   options: SimplexOptions) -> np.ndarray:
    """Maximizer of <q, x> over a constrained zonotope (via its factors)."""
    if region.n_g == 0:
        return region.center.copy()
    res = solve_lp(LpProblem(
        objective=-(region.gen_cont.T @ q),
        eq_mat=region.con_cont if region.n_c else np.zeros((0, region.n_g)),
        eq_rhs=region.con_rhs,
        lower=np.full(region.n_g, -1.0),
        upper=np.full(region.n_g, 1.0),
    ), options)
    if res.status != "optimal":
        raise SolverError(f"support LP ended with status {res.status}")
    return region.center + region.gen_cont @ res.witness


def _chord_distance(p1: np.ndarray, p2: np.ndarray, q: np.ndarray) -> float:
    chord = p2 - p1
    length = np.linalg.norm(chord)
    if length < 1e-14:
        return float(np.linalg.norm(q - p1))
    return abs(chord[0] * (q[1] - p1[1]) - chord[1] * (q[0] - p1[0])) / length


def convex_hull_2d(points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Monotone-chain hull, counterclockwise; degenerate inputs give 1 or 2
    vertices."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if pts.shape[0] <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= tol:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= tol:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if hull.shape[0] < 3:
        return np.unique(pts, axis=0)[:2]
    return hull


def project_leaf_polygon(leaf: BinaryLeaf, plane, *,
                         angular_tol: float = DEFAULT_ANGULAR_TOL,
                         options: SimplexOptions = DEFAULT_OPTIONS,
                         max_depth: int = 28) -> np.ndarray:
    """Exact 2D projection of a leaf as a CCW polygon array (k x 2).

    Adaptive support sweep with a sandwich stopping rule: an arc between two
    support directions is done once the apex of their tangent lines (the
    farthest any set point could reach beyond the chord inside that wedge)
    sits within angular_tol times the projection's diameter of the chord.
    That bound is sound, so no vertex sticking out farther than the
    tolerance can be missed. Point and segment projections come back with
    1 or 2 vertices.
    """
    plane = np.atleast_2d(np.asarray(plane, dtype=float))
    if plane.shape != (2, leaf.region.dim):
        raise DimensionMismatchError(
            f"plane shape {plane.shape} != (2, {leaf.region.dim})")
    angles = np.linspace(0.0, 2.0 * np.pi, 8, endpoint=False)
    dirs = [np.array([np.cos(a), np.sin(a)]) for a in angles]
    proj = [plane @ _support_point(leaf.region, plane.T @ d, options) for d in dirs]
    diameter = float(np.max(np.ptp(np.array(proj), axis=0)))
    scale = 1.0 + float(np.max(np.abs(np.array(proj))))
    # The absolute floor keeps rounding noise from splitting arcs forever on
    # degenerate (point/segment) projections.
    slack = angular_tol * diameter + 1e-12 * scale

    collected = list(proj)

    def apex_distance(d1, p1, d2, p2):
        # Tangent-line intersection: the wedge's outer corner beyond the chord.
        det = d1[0] * d2[1] - d1[1] * d2[0]
        if abs(det) < 1e-12:
            return np.inf
        s1, s2 = d1 @ p1, d2 @ p2
        apex = np.array([(s1 * d2[1] - s2 * d1[1]) / det,
                         (d1[0] * s2 - d2[0] * s1) / det])
        return _chord_distance(p1, p2, apex)

    def refine(d1, p1, d2, p2, depth):
        if depth >= max_depth or apex_distance(d1, p1, d2, p2) <= slack:
            return
        mid = d1 + d2
        norm = np.linalg.norm(mid)
        if norm < 1e-9:
            return
        mid /= norm
        pm = plane @ _support_point(leaf.region, plane.T @ mid, options)
        collected.append(pm)
        refine(d1, p1, mid, pm, depth + 1)
        refine(mid, pm, d2, p2, depth + 1)

    for i in range(len(dirs)):
        j = (i + 1) % len(dirs)
        refine(dirs[i], proj[i], dirs[j], proj[j], 0)

    return convex_hull_2d(np.array(collected))


def hz_to_polygons(z: HybridZonotope, plane, *,
                   angular_tol: float = DEFAULT_ANGULAR_TOL,
                   cap: int = DEFAULT_LEAF_CAP,
                   options: SimplexOptions = DEFAULT_OPTIONS) -> PolygonSet:
    """Project every feasible leaf of Z onto a plane; polygons may overlap."""
    plane = np.atleast_2d(np.asarray(plane, dtype=float))
    leaves = enumerate_leaves(z, cap=cap, options=options)
    polygons = []
    assignments = []
    for leaf in leaves:
        polygons.append(project_leaf_polygon(leaf, plane, angular_tol=angular_tol,
                                             options=options))
        assignments.append(leaf.assignment)
    return PolygonSet(plane=plane, polygons=tuple(polygons),
                      leaf_assignments=tuple(assignments))


def polygon_area(polygon: np.ndarray) -> float:
    """Shoelace area; degenerate polygons have zero area."""
    p = np.asarray(polygon, dtype=float).reshape(-1, 2)
    if p.shape[0] < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def point_in_polygon(point, polygon: np.ndarray, tol: float = 1e-9) -> bool:
    """Membership in a convex CCW polygon (boundary counts as inside)."""
    p = np.asarray(polygon, dtype=float).reshape(-1, 2)
    q = np.asarray(point, dtype=float).reshape(2)
    if p.shape[0] == 1:
        return bool(np.linalg.norm(q - p[0]) <= tol)
    if p.shape[0] == 2:
        a, b = p
        ab = b - a
        denom = float(ab @ ab)
        s = 0.0 if denom == 0 else float(np.clip((q - a) @ ab / denom, 0.0, 1.0))
        return bool(np.linalg.norm(a + s * ab - q) <= tol)
    scale = max(1.0, float(np.max(np.abs(p))))
    for i in range(p.shape[0]):
        a, b = p[i], p[(i + 1) % p.shape[0]]
        cross = (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])
        if cross < -tol * scale:
            return False
    return True
