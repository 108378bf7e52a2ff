"""Samplers and constructive factor realizations.

Three jobs live here:

* drawing feasible factor points from a hybrid zonotope, either exactly (for
  unconstrained sets) or by hit-and-run inside the continuous polytope of a
  fixed binary pattern;
* rejection-sampling states from a set through its interval enclosure plus a
  membership predicate (what the simulate command uses for initial sets);
* building a feasible factor point of a network-graph or backward-set
  constraint system in closed form from a concrete trajectory. Each neuron's
  graph cell admits an explicit factor solution per branch, the box domain's
  factors are a rescaling, and the blocks concatenate in construction order.
  These points double as verified membership witnesses and as hit-and-run
  seeds for the pattern they carry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import hz as hzm
from .errors import DimensionMismatchError, SamplingError
from .hz import FactorPoint, HybridZonotope
from .network import FeedforwardNetwork
from .reach import ClosedLoopSystem, forward_step

__all__ = [
    "sample_factors_unconstrained",
    "sample_box",
    "rejection_sample",
    "LeafSampler",
    "relu_cell_factors",
    "box_factors",
    "graph_factor_point",
    "brs_factor_point",
]


def sample_factors_unconstrained(z: HybridZonotope, count: int,
                                 rng: np.random.Generator) -> list:
    """Uniform factor points of a set without equality constraints."""
    if z.n_c:
        raise SamplingError("set has equality constraints; sample per pattern instead")
    out = []
    for _ in range(count):
        xc = rng.uniform(-1.0, 1.0, size=z.n_g)
        xb = rng.choice([-1.0, 1.0], size=z.n_b)
        out.append(FactorPoint(xc, xb))
    return out


def sample_box(box: hzm.IntervalBox, count: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(box.lower, box.upper, size=(count, box.lower.shape[0]))


def rejection_sample(z: HybridZonotope, count: int, rng: np.random.Generator, *,
                     predicate: Optional[Callable] = None,
                     max_attempts_per_point: int = 10_000,
                     tol: float = hzm.DEFAULT_TOL) -> np.ndarray:
    """Sample states of Z by drawing from its enclosure and filtering.

    ``predicate`` defaults to exact membership; passing a cheaper equivalent
    (forward simulation for backward sets) avoids the solver entirely. Thin
    sets exhaust the attempt budget and raise :class:`SamplingError`.
    """
    box = hzm.interval_enclosure(z)
    test = predicate if predicate is not None else (
        lambda x: hzm.contains_point(z, x, tol))
    points = []
    attempts = 0
    budget = max_attempts_per_point * count
    while len(points) < count:
        if attempts >= budget:
            raise SamplingError(
                f"rejection sampling got {len(points)}/{count} points "
                f"after {attempts} attempts")
        attempts += 1
        x = rng.uniform(box.lower, box.upper)
        if test(x):
            points.append(x)
    return np.array(points)


class LeafSampler:
    """Hit-and-run over one binary pattern's continuous factor polytope.

    The polytope is {xi : Ac xi = b - Ab pattern, |xi|_inf <= 1}. Directions
    are drawn from the null space of the equalities augmented with the
    coordinates the seed holds exactly at a bound: in graph-like constraint
    systems those are structurally stuck (every equality-consistent move
    through them immediately violates a partner slack's bound), and keeping
    them pinned leaves precisely the pattern's genuine degrees of freedom.
    The walk therefore explores the affine slice of the leaf through the
    seed, which for graph constructions is the whole leaf region.
    """

    def __init__(self, z: HybridZonotope, pattern: np.ndarray, seed_point: np.ndarray,
                 *, tol: float = 1e-9):
        self.z = z
        self.pattern = np.asarray(pattern, dtype=float).reshape(-1)
        xi = np.asarray(seed_point, dtype=float).reshape(-1)
        if xi.shape[0] != z.n_g:
            raise DimensionMismatchError(
                f"seed length ({xi.shape[0]}) != continuous generators ({z.n_g})")
        self.rhs = z.con_rhs - z.con_bin @ self.pattern if z.n_c else np.zeros(0)
        if z.n_c:
            residual = float(np.max(np.abs(z.con_cont @ xi - self.rhs), initial=0.0))
            if residual > 1e-7:
                raise SamplingError(f"seed violates pattern equalities by {residual:.3g}")
        self.current = np.clip(xi, -1.0, 1.0)
        stuck = np.flatnonzero(np.abs(self.current) >= 1.0 - 1e-9)
        rows = [z.con_cont] if z.n_c else []
        if stuck.size:
            rows.append(np.eye(z.n_g)[stuck, :])
        mat = np.vstack(rows) if rows else np.zeros((0, z.n_g))
        self.null_basis = self._null_space(mat, z.n_g, tol)

    @staticmethod
    def _null_space(a: np.ndarray, n_g: int, tol: float) -> np.ndarray:
        if a.shape[0] == 0 or n_g == 0:
            return np.eye(n_g)
        try:
            _, s, vt = np.linalg.svd(a, full_matrices=True)
            rank = int(np.sum(s > tol * max(a.shape) * (s[0] if s.size else 1.0)))
            return vt[rank:].T
        except np.linalg.LinAlgError:
            # gesdd occasionally refuses to converge; the Gram-matrix route is
            # slower but dependable at these sizes.
            gram = a.T @ a
            eigvals, eigvecs = np.linalg.eigh(gram)
            scale = max(float(eigvals[-1]), 1.0)
            keep = eigvals <= (tol * max(a.shape)) ** 2 * scale
            return eigvecs[:, keep]

    @property
    def is_point(self) -> bool:
        return self.null_basis.shape[1] == 0

    def draw(self, count: int, rng: np.random.Generator, *,
             burn_in: int = 50, thin: int = 3) -> list:
        """Return ``count`` factor points; the walk state persists across calls."""
        if self.is_point:
            return [FactorPoint(self.current.copy(), self.pattern.copy())
                    for _ in range(count)]
        out = []
        steps = burn_in + thin * count
        xi = self.current
        k = self.null_basis.shape[1]
        for step in range(steps):
            direction = self.null_basis @ rng.standard_normal(k)
            norm = np.linalg.norm(direction)
            if norm < 1e-14:
                continue
            direction /= norm
            lo, hi = -np.inf, np.inf
            pos = direction > 1e-13
            neg = direction < -1e-13
            if np.any(pos):
                hi = min(hi, np.min((1.0 - xi[pos]) / direction[pos]))
                lo = max(lo, np.max((-1.0 - xi[pos]) / direction[pos]))
            if np.any(neg):
                hi = min(hi, np.min((-1.0 - xi[neg]) / direction[neg]))
                lo = max(lo, np.max((1.0 - xi[neg]) / direction[neg]))
            if not np.isfinite(lo) or not np.isfinite(hi) or hi < lo:
                continue
            xi = np.clip(xi + rng.uniform(lo, hi) * direction, -1.0, 1.0)
            if step >= burn_in and (step - burn_in) % thin == 0:
                out.append(FactorPoint(xi.copy(), self.pattern.copy()))
        self.current = xi
        while len(out) < count:
            out.append(FactorPoint(xi.copy(), self.pattern.copy()))
        return out[:count]


# -- constructive factor realizations ------------------------------------


def relu_cell_factors(z_value: float, alpha: float, beta: float) -> tuple:
    """Closed-form factor solution of one neuron's graph cell.

    Returns (six continuous factors, branch). Branch +1 is the inactive
    segment (z <= 0), -1 the active one; at the kink either works and +1 is
    chosen.
    """
    if z_value <= 0.0:
        xi1 = 2.0 * z_value / alpha + 1.0
        return np.array([xi1, 0.0, -xi1, xi1, 1.0, 1.0]), 1.0
    xi2 = 2.0 * z_value / beta - 1.0
    return np.array([0.0, xi2, 1.0, 1.0, -xi2, xi2]), -1.0


def box_factors(box_hz: HybridZonotope, x, tol: float = 1e-9) -> np.ndarray:
    """Factors of an axis-aligned (diagonal, unconstrained) zonotope at x."""
    if box_hz.n_c or box_hz.n_b:
        raise SamplingError("constructive factors need an unconstrained box set")
    g = box_hz.gen_cont
    if g.shape[0] != g.shape[1] or np.max(np.abs(g - np.diag(np.diag(g))), initial=0.0) > 0:
        raise SamplingError("constructive factors need diagonal generators")
    x = np.asarray(x, dtype=float).reshape(-1)
    half = np.diag(g)
    xi = np.zeros(box_hz.dim)
    for i, h in enumerate(half):
        offset = x[i] - box_hz.center[i]
        if h > 0:
            xi[i] = offset / h
        elif abs(offset) > tol:
            raise SamplingError(f"point leaves degenerate box coordinate {i}")
    if xi.size and np.max(np.abs(xi)) > 1.0 + 1e-9:
        raise SamplingError(
            f"point outside box: factor magnitude {np.max(np.abs(xi)):.6g}")
    return np.clip(xi, -1.0, 1.0)


def graph_factor_point(net: FeedforwardNetwork, domain: HybridZonotope,
                       alpha: float, beta: float, x) -> FactorPoint:
    """Feasible factor point of the network graph realizing (x, pi(x)).

    Concatenates the domain-box factors with each hidden neuron's cell
    factors in layer order, mirroring the construction's column layout.
    """
    xi_cont = [box_factors(domain, x)]
    xi_bin = []
    for z_layer in net.preactivations(x):
        for z_i in z_layer:
            cell, branch = relu_cell_factors(float(z_i), alpha, beta)
            xi_cont.append(cell)
            xi_bin.append(branch)
    return FactorPoint(np.concatenate(xi_cont),
                       np.array(xi_bin, dtype=float))


def brs_factor_point(system: ClosedLoopSystem, target: HybridZonotope,
                     alpha: float, beta: float, t: int, x0) -> FactorPoint:
    """Feasible factor point of the t-step backward set realizing x0.

    Walks the trajectory: one graph factor block per step (states x(0) ..
    x(t-1)), then the target-box factors of x(t). Raises
    :class:`SamplingError` if the trajectory leaves the state set or misses
    the target, i.e. if x0 is not actually a member.
    """
    x = np.asarray(x0, dtype=float).reshape(-1)
    xi_cont = []
    xi_bin = []
    for _ in range(t):
        block = graph_factor_point(system.controller, system.state_set,
                                   alpha, beta, x)
        xi_cont.append(block.xi_cont)
        xi_bin.append(block.xi_bin)
        x = forward_step(system, x)
    xi_cont.append(box_factors(target, x))
    xi_bin.append(np.zeros(0))
    return FactorPoint(np.concatenate(xi_cont), np.concatenate(xi_bin))
