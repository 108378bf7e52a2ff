"""Mixed-integer feasibility engine for hybrid zonotopes.

The central fact: a set <Gc, Gb, c, Ac, Ab, b> is nonempty exactly when

    min { ||xi_c||_inf : Ac xi_c + Ab xi_b = b, xi_b in {-1,1}^n_b }  <= 1,

so emptiness, point membership and set-intersection queries all reduce to
one mixed-integer linear program over the factors. The built-in solver is a
deterministic branch-and-bound over the binary factors: the relaxation keeps
them in [-1, 1], branching picks the most fractional one (under the affine
map to {0,1}), the value -1 is explored before +1, and nodes are processed
depth-first. Each integral candidate is re-solved with its pattern fixed so
reported witnesses are clean.

Two solve modes:

* exact (default): minimizes the infinity norm via its epigraph LP and
  returns the true optimum;
* decision (``threshold`` given): only settles whether some factor point has
  norm <= threshold, using plain feasibility LPs with the box fixed at the
  threshold. Infeasible nodes are pruned and the search stops at the first
  integral witness, which is what the emptiness/membership/avoidance
  predicates need and is much cheaper on large sets.

The solver sits behind :class:`MilpBackend`, so a commercial MILP solver can
be plugged in; the branch-and-bound here is the default and the one the test
suite exercises.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Protocol, TYPE_CHECKING

import numpy as np

from . import hz as hzm
from .errors import DimensionMismatchError, NodeLimitError, SolverError
from .hz import FactorPoint, HybridZonotope
from .lp import DEFAULT_OPTIONS, LpProblem, SimplexOptions, SolveReport, solve_lp

if TYPE_CHECKING:  # BrsSequence is duck-typed at runtime to avoid an import cycle
    from .reach import BrsSequence

__all__ = [
    "MilpProblem",
    "MilpBackend",
    "BranchAndBoundBackend",
    "min_infnorm_problem",
    "emptiness_problem",
    "membership_problem",
    "solve_milp_min_infnorm",
    "is_empty",
    "membership_check",
    "relax_to_lp",
    "verify_avoidance",
    "verify_horizon",
    "AvoidanceReport",
    "HorizonReport",
    "DEFAULT_NODE_LIMIT",
    "STRICT_TOL",
]

DEFAULT_NODE_LIMIT = 1_000_000
STRICT_TOL = 1e-9      # strictness margin on the "> 1" emptiness comparison
INT_TOL = 1e-6         # |xi_b| >= 1 - INT_TOL counts as integral


@dataclass(frozen=True)
class MilpProblem:
    """An LP plus the indices of variables restricted to {-1, +1}."""

    lp: LpProblem
    binary_idx: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.binary_idx, dtype=int).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= self.lp.n_vars):
            raise DimensionMismatchError("binary index out of range")
        object.__setattr__(self, "binary_idx", idx)


@dataclass(frozen=True)
class _Layout:
    """Where the factor blocks live inside the LP variable vector."""

    xi_cont: slice
    xi_bin: slice
    objective_var: Optional[int] = None  # epigraph variable in exact mode


def emptiness_problem(z: HybridZonotope, radius: float) -> tuple[MilpProblem, _Layout]:
    """Feasibility program: factors of Z with the continuous box at ``radius``."""
    n_g, n_b, n_c = z.n_g, z.n_b, z.n_c
    n_vars = n_g + n_b
    lp = LpProblem(
        objective=np.zeros(n_vars),
        eq_mat=np.hstack([z.con_cont, z.con_bin]) if n_c else np.zeros((0, n_vars)),
        eq_rhs=z.con_rhs,
        lower=np.concatenate([np.full(n_g, -radius), np.full(n_b, -1.0)]),
        upper=np.concatenate([np.full(n_g, radius), np.full(n_b, 1.0)]),
    )
    layout = _Layout(xi_cont=slice(0, n_g), xi_bin=slice(n_g, n_g + n_b))
    return MilpProblem(lp, np.arange(n_g, n_g + n_b)), layout


def membership_problem(z: HybridZonotope, x, radius: float,
                       tol: float) -> tuple[MilpProblem, _Layout]:
    """Feasibility program for x in Z with componentwise residual slack tol."""
    x = np.asarray(x, dtype=float).reshape(-1)
    n, n_g, n_b, n_c = z.dim, z.n_g, z.n_b, z.n_c
    n_vars = n_g + n_b + n
    eq = np.zeros((n_c + n, n_vars))
    if n_c:
        eq[:n_c, :n_g] = z.con_cont
        eq[:n_c, n_g:n_g + n_b] = z.con_bin
    eq[n_c:, :n_g] = z.gen_cont
    eq[n_c:, n_g:n_g + n_b] = z.gen_bin
    eq[n_c:, n_g + n_b:] = np.eye(n)
    lp = LpProblem(
        objective=np.zeros(n_vars),
        eq_mat=eq,
        eq_rhs=np.concatenate([z.con_rhs, x - z.center]),
        lower=np.concatenate([np.full(n_g, -radius), np.full(n_b, -1.0), np.full(n, -tol)]),
        upper=np.concatenate([np.full(n_g, radius), np.full(n_b, 1.0), np.full(n, tol)]),
    )
    layout = _Layout(xi_cont=slice(0, n_g), xi_bin=slice(n_g, n_g + n_b))
    return MilpProblem(lp, np.arange(n_g, n_g + n_b)), layout


def min_infnorm_problem(z: HybridZonotope) -> tuple[MilpProblem, _Layout]:
    """Epigraph LP of min ||xi_c||_inf over the factor set of Z.

    Variables are [xi_c, xi_b, t, s_hi, s_lo] with xi_c free, t >= 0 and
    slack rows  xi_i - t + s_hi_i = 0,  xi_i + t - s_lo_i = 0  encoding
    -t <= xi_i <= t. The epigraph variable is deliberately unbounded above;
    the comparison against 1 happens in the callers.
    """
    n_g, n_b, n_c = z.n_g, z.n_b, z.n_c
    t_idx = n_g + n_b
    n_vars = n_g + n_b + 1 + 2 * n_g
    eq = np.zeros((n_c + 2 * n_g, n_vars))
    if n_c:
        eq[:n_c, :n_g] = z.con_cont
        eq[:n_c, n_g:n_g + n_b] = z.con_bin
    if n_g:
        rows_hi = slice(n_c, n_c + n_g)
        rows_lo = slice(n_c + n_g, n_c + 2 * n_g)
        eq[rows_hi, :n_g] = np.eye(n_g)
        eq[rows_hi, t_idx] = -1.0
        eq[rows_hi, t_idx + 1:t_idx + 1 + n_g] = np.eye(n_g)
        eq[rows_lo, :n_g] = np.eye(n_g)
        eq[rows_lo, t_idx] = 1.0
        eq[rows_lo, t_idx + 1 + n_g:] = -np.eye(n_g)
    objective = np.zeros(n_vars)
    objective[t_idx] = 1.0
    upper = np.full(n_vars, np.inf)
    upper[n_g:n_g + n_b] = 1.0
    lp = LpProblem(
        objective=objective,
        eq_mat=eq,
        eq_rhs=np.concatenate([z.con_rhs, np.zeros(2 * n_g)]),
        lower=np.concatenate([np.full(n_g, -np.inf), np.full(n_b, -1.0),
                              [0.0], np.zeros(2 * n_g)]),
        upper=upper,
    )
    layout = _Layout(xi_cont=slice(0, n_g), xi_bin=slice(n_g, n_g + n_b),
                     objective_var=t_idx)
    return MilpProblem(lp, np.arange(n_g, n_g + n_b)), layout


def _solve_bnb(problem: MilpProblem, layout: _Layout, *,
               threshold: Optional[float],
               node_limit: int,
               options: SimplexOptions,
               trace: Optional[list] = None) -> SolveReport:
    """Deterministic depth-first branch-and-bound over the binary factors."""
    start = time.perf_counter()
    lp = problem.lp
    bin_idx = problem.binary_idx
    decision = threshold is not None
    base_lower = lp.lower
    base_upper = lp.upper

    incumbent: Optional[FactorPoint] = None
    incumbent_obj = np.inf
    nodes = 0
    # Stack entries: (bin lower bounds, bin upper bounds, parent bound, node id)
    stack = [(base_lower[bin_idx].copy(), base_upper[bin_idx].copy(), -np.inf, 0)]
    next_id = 1

    def node_lp(bin_lo, bin_hi):
        lo = base_lower.copy()
        hi = base_upper.copy()
        lo[bin_idx] = bin_lo
        hi[bin_idx] = bin_hi
        return solve_lp(LpProblem(lp.objective, lp.eq_mat, lp.eq_rhs, lo, hi), options)

    def finish(status, objective=None, witness=None):
        return SolveReport(status=status, objective=objective, witness=witness,
                           node_count=nodes, wall_time=time.perf_counter() - start,
                           threshold=threshold)

    def extract(x):
        return FactorPoint(xi_cont=x[layout.xi_cont].copy(),
                           xi_bin=np.sign(x[layout.xi_bin]).astype(float))

    while stack:
        bin_lo, bin_hi, parent_bound, node_id = stack.pop()
        if nodes >= node_limit:
            err = NodeLimitError(f"branch-and-bound node limit {node_limit} exceeded")
            err.report = finish("node_limit", incumbent_obj if incumbent else None,
                                incumbent)
            raise err
        nodes += 1
        res = node_lp(bin_lo, bin_hi)
        if res.status == "infeasible":
            continue
        if res.status == "unbounded":
            raise SolverError("relaxation unbounded: malformed factor program")

        bound = res.objective if not decision else None
        if trace is not None and not decision:
            trace.append((node_id, parent_bound, bound))
        if not decision and bound >= incumbent_obj - 1e-12:
            continue

        xb = res.witness[layout.xi_bin]
        frac = 1.0 - np.abs(np.clip(xb, -1.0, 1.0))
        free = bin_lo < bin_hi
        candidates = np.flatnonzero(free & (frac > INT_TOL))
        if candidates.size == 0:
            pattern = np.where(xb >= 0.0, 1.0, -1.0)
            pattern = np.where(free, pattern, bin_lo)
            fixed = node_lp(pattern, pattern)
            if fixed.status != "optimal":
                continue  # integral only within tolerance; no branch left
            point = extract(fixed.witness)
            point = FactorPoint(point.xi_cont, pattern.copy())
            if decision:
                norm = float(np.max(np.abs(point.xi_cont))) if point.xi_cont.size else 0.0
                return finish("optimal", norm, point)
            if fixed.objective < incumbent_obj:
                incumbent_obj = fixed.objective
                incumbent = point
            continue

        k = int(candidates[np.argmax(frac[candidates])])
        for value in (1.0, -1.0):  # pushed so that -1 is explored first
            clo, chi = bin_lo.copy(), bin_hi.copy()
            clo[k] = chi[k] = value
            stack.append((clo, chi, bound if bound is not None else -np.inf, next_id))
            next_id += 1

    if decision:
        return finish("infeasible")
    if incumbent is None:
        return finish("infeasible")
    return finish("optimal", float(incumbent_obj), incumbent)


def solve_milp_min_infnorm(z: HybridZonotope, *,
                           threshold: Optional[float] = None,
                           node_limit: int = DEFAULT_NODE_LIMIT,
                           options: SimplexOptions = DEFAULT_OPTIONS,
                           trace: Optional[list] = None) -> SolveReport:
    """min ||xi_c||_inf over the factor set of Z.

    With ``threshold`` set, runs in decision mode: the report answers whether
    a factor point with norm <= threshold exists ("optimal" with a witness,
    whose norm is reported, or "infeasible"), stopping at the first witness.
    Without it, the exact optimum and an optimal witness are returned.
    """
    if threshold is None:
        problem, layout = min_infnorm_problem(z)
    else:
        problem, layout = emptiness_problem(z, radius=threshold)
    return _solve_bnb(problem, layout, threshold=threshold,
                      node_limit=node_limit, options=options, trace=trace)


class MilpBackend(Protocol):
    """Escape hatch: anything that can answer the min-infnorm query."""

    def solve_min_infnorm(self, z: HybridZonotope, *,
                          threshold: Optional[float] = None,
                          node_limit: int = DEFAULT_NODE_LIMIT) -> SolveReport:
        ...


class BranchAndBoundBackend:
    """Default backend wrapping the built-in branch-and-bound."""

    def __init__(self, options: SimplexOptions = DEFAULT_OPTIONS):
        self.options = options

    def solve_min_infnorm(self, z, *, threshold=None, node_limit=DEFAULT_NODE_LIMIT):
        return solve_milp_min_infnorm(z, threshold=threshold,
                                      node_limit=node_limit, options=self.options)


_DEFAULT_BACKEND = BranchAndBoundBackend()


def is_empty(z: HybridZonotope, *, tol_strict: float = STRICT_TOL,
             node_limit: int = DEFAULT_NODE_LIMIT,
             backend: Optional[MilpBackend] = None) -> bool:
    """True iff Z is empty, i.e. the min factor norm exceeds 1 + tol_strict.

    Ties (optimum within tol_strict of 1) read as nonempty, erring toward
    detecting contact in the safety checks built on top of this predicate.
    """
    backend = backend or _DEFAULT_BACKEND
    report = backend.solve_min_infnorm(z, threshold=1.0 + tol_strict,
                                       node_limit=node_limit)
    return report.status == "infeasible"


def membership_check(z: HybridZonotope, x, tol: float = hzm.DEFAULT_TOL, *,
                     tol_strict: float = STRICT_TOL,
                     node_limit: int = DEFAULT_NODE_LIMIT,
                     options: SimplexOptions = DEFAULT_OPTIONS) -> bool:
    """Feasibility MILP behind hz.contains_point (no enclosure fast path)."""
    problem, layout = membership_problem(z, x, radius=1.0 + tol_strict, tol=tol)
    report = _solve_bnb(problem, layout, threshold=1.0 + tol_strict,
                        node_limit=node_limit, options=options)
    return report.status == "optimal"


def relax_to_lp(z: HybridZonotope) -> HybridZonotope:
    """Tightest convex relaxation: binary factors become continuous ones.

    The resulting set has n_b = 0, so emptiness and avoidance checks on it
    are single LPs. It contains the original set, which makes "safe" verdicts
    on the relaxation sound for the exact set.
    """
    if z.n_b == 0:
        return z
    return hzm.make_hz(
        z.center,
        np.hstack([z.gen_cont, z.gen_bin]),
        None,
        np.hstack([z.con_cont, z.con_bin]) if z.n_c else None,
        None,
        z.con_rhs if z.n_c else None,
    )


def _avoidance_hz(p_t: HybridZonotope, x_0: HybridZonotope) -> HybridZonotope:
    """Stacked factor program whose emptiness decides P_t against X0.

    Built directly from the blocks of both sets (not via the generic
    intersection op) so the two construction routes can be cross-checked.
    """
    if p_t.dim != x_0.dim:
        raise DimensionMismatchError(
            f"set dimensions differ ({p_t.dim} vs {x_0.dim})")
    n = p_t.dim
    gc = np.hstack([p_t.gen_cont, np.zeros((n, x_0.n_g))])
    gb = np.hstack([p_t.gen_bin, np.zeros((n, x_0.n_b))])
    ac = np.vstack([
        np.hstack([p_t.con_cont, np.zeros((p_t.n_c, x_0.n_g))]),
        np.hstack([np.zeros((x_0.n_c, p_t.n_g)), x_0.con_cont]),
        np.hstack([p_t.gen_cont, -x_0.gen_cont]),
    ])
    ab = np.vstack([
        np.hstack([p_t.con_bin, np.zeros((p_t.n_c, x_0.n_b))]),
        np.hstack([np.zeros((x_0.n_c, p_t.n_b)), x_0.con_bin]),
        np.hstack([p_t.gen_bin, -x_0.gen_bin]),
    ])
    rhs = np.concatenate([p_t.con_rhs, x_0.con_rhs, x_0.center - p_t.center])
    return hzm.make_hz(p_t.center, gc, gb, ac, ab, rhs)


@dataclass
class AvoidanceReport:
    """Verdict for one backward step against an initial set."""

    safe: bool
    objective: Optional[float]
    witness_state: Optional[np.ndarray]
    witness: Optional[FactorPoint]
    solve: Optional[SolveReport]
    wall_time: float
    step: Optional[int] = None
    method: str = "milp"

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "safe": self.safe,
            "objective": self.objective,
            "witness_state": None if self.witness_state is None
            else np.asarray(self.witness_state).tolist(),
            "node_count": self.solve.node_count if self.solve else 0,
            "wall_time": self.wall_time,
            "method": self.method,
        }


def verify_avoidance(p_t: HybridZonotope, x_0: HybridZonotope, *,
                     relax: bool = False,
                     exact_optimum: bool = False,
                     tol_strict: float = STRICT_TOL,
                     node_limit: int = DEFAULT_NODE_LIMIT,
                     options: SimplexOptions = DEFAULT_OPTIONS,
                     use_enclosure_fast_path: bool = True) -> AvoidanceReport:
    """Decide whether the initial set misses the backward set P_t.

    Safe means the stacked factor program has minimum norm > 1 (+ tol_strict);
    unsafe reports a witness state lying in both sets. ``relax`` swaps in the
    convex relaxation (pure LP, sound in the safe direction);
    ``exact_optimum`` requests the true minimum instead of the cheaper
    decision query.
    """
    start = time.perf_counter()
    if use_enclosure_fast_path:
        box_t = hzm.interval_enclosure(p_t)
        box_0 = hzm.interval_enclosure(x_0)
        if np.any(box_t.lower > box_0.upper) or np.any(box_0.lower > box_t.upper):
            return AvoidanceReport(safe=True, objective=None, witness_state=None,
                                   witness=None, solve=None,
                                   wall_time=time.perf_counter() - start,
                                   method="enclosure")
    stacked = _avoidance_hz(p_t, x_0)
    if relax:
        stacked = relax_to_lp(stacked)
    threshold = None if exact_optimum else 1.0 + tol_strict
    report = solve_milp_min_infnorm(stacked, threshold=threshold,
                                    node_limit=node_limit, options=options)
    if report.status == "infeasible":
        return AvoidanceReport(safe=True, objective=report.objective,
                               witness_state=None, witness=None, solve=report,
                               wall_time=time.perf_counter() - start,
                               method="lp" if relax else "milp")
    safe = report.objective is not None and report.objective > 1.0 + tol_strict
    witness_state = None
    if not safe and report.witness is not None:
        # The stacked program's value map is P_t's state block (with zero
        # columns for the initial set's factors), so realizing the witness
        # through it is valid for the relaxed program too.
        witness_state = (stacked.center
                         + stacked.gen_cont @ report.witness.xi_cont
                         + stacked.gen_bin @ report.witness.xi_bin)
    return AvoidanceReport(safe=safe, objective=report.objective,
                           witness_state=witness_state,
                           witness=report.witness, solve=report,
                           wall_time=time.perf_counter() - start,
                           method="lp" if relax else "milp")


@dataclass
class HorizonReport:
    """Aggregated per-step avoidance verdicts over a finite horizon."""

    steps: list
    safe: bool

    def first_unsafe_step(self) -> Optional[int]:
        for rep in self.steps:
            if not rep.safe:
                return rep.step
        return None

    def to_dict(self) -> dict:
        return {"safe": self.safe, "steps": [rep.to_dict() for rep in self.steps]}


def verify_horizon(brs, x_0: HybridZonotope, **kwargs) -> HorizonReport:
    """Apply the avoidance check for t = 1..T of a backward sequence.

    ``brs`` may be a reach.BrsSequence or any object with a ``sets`` list
    whose first entry is the target. T = 0 (no backward steps) is vacuously
    safe with an empty report.
    """
    sets = brs.sets if hasattr(brs, "sets") else list(brs)
    steps = []
    safe = True
    for t, p_t in enumerate(sets[1:], start=1):
        rep = verify_avoidance(p_t, x_0, **kwargs)
        rep.step = t
        steps.append(rep)
        safe = safe and rep.safe
    return HorizonReport(steps=steps, safe=safe)
