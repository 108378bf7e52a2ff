"""Dense bounded-variable primal simplex.

Solves   min c'x  s.t.  A x = b,  l <= x <= u   (bounds may be infinite)
with a revised two-phase simplex: phase 1 drives a full artificial basis to
zero, phase 2 optimizes the real objective. The basis inverse is kept
explicitly and updated by rank-1 pivots with periodic refactorization.
Pricing is Dantzig (most violating reduced cost) with a permanent switch to
Bland's rule after a long degenerate stall, which restores the anti-cycling
guarantee. All tie-breaks are by lowest index, so runs are deterministic.

Built for desk-scale dense problems (hundreds of rows); determinism and
auditability are preferred over raw speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, SolverError

__all__ = ["LpProblem", "SolveReport", "SimplexOptions", "solve_lp"]

_LOWER, _UPPER, _FREE, _BASIC, _FIXED = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class LpProblem:
    """min objective . x  subject to  eq_mat x = eq_rhs,  lower <= x <= upper."""

    objective: np.ndarray
    eq_mat: np.ndarray
    eq_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        a = np.atleast_2d(np.asarray(self.eq_mat, dtype=float))
        b = np.asarray(self.eq_rhs, dtype=float).reshape(-1)
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        n = c.shape[0]
        if a.size == 0:
            a = a.reshape(b.shape[0], n)
        if a.shape != (b.shape[0], n):
            raise DimensionMismatchError(
                f"eq_mat shape {a.shape} incompatible with rhs ({b.shape[0]}) "
                f"and objective ({n})")
        if lo.shape[0] != n or hi.shape[0] != n:
            raise DimensionMismatchError(
                f"bound lengths ({lo.shape[0]}, {hi.shape[0]}) != objective length ({n})")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_mat", np.ascontiguousarray(a))
        object.__setattr__(self, "eq_rhs", b)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def n_rows(self) -> int:
        return self.eq_rhs.shape[0]


@dataclass
class SolveReport:
    """Outcome of an LP or MILP solve.

    ``witness`` is the primal assignment when ``status == "optimal"`` (for
    MILPs a :class:`~hzreach.hz.FactorPoint`, for LPs a plain vector).
    ``threshold`` is set when the solve ran in decision mode, in which case
    ``status == "infeasible"`` means "no point with objective <= threshold".
    """

    status: str
    objective: Optional[float] = None
    witness: object = None
    node_count: int = 0
    wall_time: float = 0.0
    iterations: int = 0
    threshold: Optional[float] = None

    def to_dict(self) -> dict:
        wit = self.witness
        if wit is not None and hasattr(wit, "xi_cont"):
            wit = {"xi_cont": np.asarray(wit.xi_cont).tolist(),
                   "xi_bin": np.asarray(wit.xi_bin).tolist()}
        elif wit is not None:
            wit = np.asarray(wit).tolist()
        return {
            "status": self.status,
            "objective": self.objective,
            "witness": wit,
            "node_count": self.node_count,
            "wall_time": self.wall_time,
            "iterations": self.iterations,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class SimplexOptions:
    feas_tol: float = 1e-7          # phase-1 objective / bound violation threshold
    opt_tol: float = 1e-9           # reduced-cost eligibility
    ratio_tol: float = 1e-9         # pivot magnitude threshold in the ratio test
    refactor_every: int = 96
    degenerate_stall: int = 200     # pivots with zero step before Bland kicks in
    max_iterations: Optional[int] = None


DEFAULT_OPTIONS = SimplexOptions()


def solve_lp(problem: LpProblem, options: SimplexOptions = DEFAULT_OPTIONS) -> SolveReport:
    """Solve an LP; returns status optimal/infeasible/unbounded.

    Numerical breakdown (iteration cap, basis drift that refactorization
    cannot repair) raises :class:`SolverError` rather than returning a wrong
    answer.
    """
    import time

    start = time.perf_counter()
    sx = _Simplex(problem, options)
    status, x, obj, iters = sx.run()
    report = SolveReport(status=status, iterations=iters,
                         wall_time=time.perf_counter() - start)
    if status == "optimal":
        report.objective = obj
        report.witness = x
    return report


class _Simplex:
    def __init__(self, problem: LpProblem, options: SimplexOptions):
        self.opt = options
        m, n = problem.n_rows, problem.n_vars
        self.m, self.n_orig = m, n
        self.c_orig = problem.objective
        lo = problem.lower.copy()
        hi = problem.upper.copy()
        if np.any(lo > hi + options.feas_tol):
            self.trivially_infeasible = True
            return
        self.trivially_infeasible = False
        np.minimum(lo, hi, out=lo)

        # Append one artificial column per row; sign chosen after the
        # nonbasic starting point is known so artificial values are >= 0.
        self.ncols = n + m
        self.A = np.hstack([problem.eq_mat, np.zeros((m, m))]) if m else np.zeros((0, n))
        self.b = problem.eq_rhs
        self.lower = np.concatenate([lo, np.zeros(m)])
        self.upper = np.concatenate([hi, np.full(m, np.inf)])

        self.status = np.empty(self.ncols, dtype=np.int8)
        self.x = np.zeros(self.ncols)
        for j in range(n):
            l, u = lo[j], hi[j]
            if l == u:
                self.status[j], self.x[j] = _FIXED, l
            elif np.isfinite(l) and np.isfinite(u):
                self.status[j], self.x[j] = (_LOWER, l) if abs(l) <= abs(u) else (_UPPER, u)
            elif np.isfinite(l):
                self.status[j], self.x[j] = _LOWER, l
            elif np.isfinite(u):
                self.status[j], self.x[j] = _UPPER, u
            else:
                self.status[j], self.x[j] = _FREE, 0.0

        self.status[n:] = _BASIC
        self.basis = np.arange(n, n + m)
        if m:
            resid = self.b - problem.eq_mat @ self.x[:n]
            self._crash_singletons(problem.eq_mat, resid)
            signs = np.where(resid >= 0.0, 1.0, -1.0)
            self.A[np.arange(m), n + np.arange(m)] = signs
            covered = self.basis != np.arange(n, n + m)
            self.x[n:] = np.where(covered, 0.0, np.abs(resid))
            art = n + np.flatnonzero(covered)
            self.status[art] = _FIXED
            self.upper[art] = 0.0
            self.binv = np.linalg.inv(self.A[:, self.basis])
        else:
            self.binv = np.zeros((0, 0))

    def _crash_singletons(self, a, resid):
        """Seed the basis with singleton columns that absorb their row's
        residual while staying inside their own bounds; rows left uncovered
        keep an artificial. Deterministic: first acceptable column in index
        order claims its row."""
        n = self.n_orig
        nz_count = np.count_nonzero(a, axis=0)
        for j in np.flatnonzero(nz_count == 1):
            if self.status[j] == _FIXED:
                continue
            i = int(np.flatnonzero(a[:, j])[0])
            if self.basis[i] < n:
                continue
            coef = a[i, j]
            if abs(coef) < 1e-2:
                continue
            value = self.x[j] + resid[i] / coef
            if value < self.lower[j] - 1e-12 or value > self.upper[j] + 1e-12:
                continue
            self.x[j] = min(max(value, self.lower[j]), self.upper[j])
            self.status[j] = _BASIC
            self.basis[i] = j
            resid[i] = 0.0

    # -- driver ---------------------------------------------------------

    def run(self):
        if self.trivially_infeasible:
            return "infeasible", None, None, 0
        m, n = self.m, self.n_orig
        total_iters = 0
        if m:
            c1 = np.zeros(self.ncols)
            c1[n:] = 1.0
            status, iters = self._iterate(c1, phase=1)
            total_iters += iters
            if status != "optimal":
                raise SolverError(f"phase-1 simplex ended with status {status}")
            scale = max(1.0, float(np.max(np.abs(self.b))) if self.b.size else 1.0)
            if float(c1 @ self.x) > self.opt.feas_tol * scale:
                return "infeasible", None, None, total_iters
            # Pin artificials at zero for phase 2; basic ones guard
            # redundant rows and leave the basis through degenerate pivots.
            self.lower[n:] = 0.0
            self.upper[n:] = 0.0
            fixed = (self.status[n:] != _BASIC)
            self.status[n:][fixed] = _FIXED
            self.x[n:][fixed] = 0.0

        c2 = np.concatenate([self.c_orig, np.zeros(m)])
        status, iters = self._iterate(c2, phase=2)
        total_iters += iters
        if status == "unbounded":
            return "unbounded", None, None, total_iters
        if status != "optimal":
            raise SolverError(f"phase-2 simplex ended with status {status}")
        x = self.x[:n].copy()
        return "optimal", x, float(self.c_orig @ x), total_iters

    # -- core loop ------------------------------------------------------

    def _iterate(self, c, phase):
        opt = self.opt
        m = self.m
        if m == 0:
            return self._solve_unconstrained(c)
        max_iter = opt.max_iterations or (200 * (m + self.ncols) + 2000)
        bland = False
        stall = 0
        iters = 0
        pivots_since_refactor = 0
        viol = np.empty(self.ncols)
        ger = np.empty((m, m))
        sign_for = np.array([-1.0, 1.0, 0.0, 0.0, 0.0])  # LOWER wants d<0, UPPER d>0

        while True:
            if iters > max_iter:
                raise SolverError(f"simplex iteration limit {max_iter} exceeded")
            iters += 1

            y = c[self.basis] @ self.binv
            d = c - y @ self.A
            st = self.status
            # violation score per column: -d at lower, +d at upper, |d| free
            np.multiply(d, sign_for[st], out=viol)
            free_mask = st == _FREE
            if free_mask.any():
                viol[free_mask] = np.abs(d[free_mask])

            if bland:
                eligible = np.flatnonzero(viol > opt.opt_tol)
                if eligible.size == 0:
                    return "optimal", iters
                j = int(eligible[0])
            else:
                j = int(np.argmax(viol))
                if viol[j] <= opt.opt_tol:
                    return "optimal", iters

            direction = 1.0
            if st[j] == _UPPER or (st[j] == _FREE and d[j] > 0):
                direction = -1.0

            w = self.binv @ self.A[:, j]
            sw = w if direction > 0 else -w
            xb = self.x[self.basis]
            lb = self.lower[self.basis]
            ub = self.upper[self.basis]

            with np.errstate(divide="ignore", invalid="ignore"):
                span = np.where(sw > opt.ratio_tol, xb - lb,
                                np.where(sw < -opt.ratio_tol, xb - ub, np.inf))
                ratios = span / sw
            ratios[np.abs(sw) <= opt.ratio_tol] = np.inf
            np.maximum(ratios, 0.0, out=ratios)

            own_range = self.upper[j] - self.lower[j]
            theta_basic = float(np.min(ratios)) if m else np.inf
            theta = min(theta_basic, own_range)

            if not np.isfinite(theta):
                if phase == 1:
                    raise SolverError("phase-1 objective unbounded: numerical failure")
                return "unbounded", iters

            if theta <= opt.ratio_tol:
                stall += 1
                if stall >= opt.degenerate_stall and not bland:
                    bland = True
            else:
                stall = 0

            if own_range <= theta_basic:
                # Bound flip: the entering variable crosses its own range.
                self.x[self.basis] = xb - own_range * sw
                self.x[j] = self.upper[j] if st[j] == _LOWER else self.lower[j]
                self.status[j] = _UPPER if st[j] == _LOWER else _LOWER
                continue

            # Leaving variable: smallest ratio; ties -> largest |pivot|,
            # then lowest basic index (deterministic).
            candidates = np.flatnonzero(ratios <= theta_basic + opt.ratio_tol)
            if candidates.size > 1:
                piv = np.abs(sw[candidates])
                best = piv >= piv.max() - 1e-12
                candidates = candidates[best]
                candidates = candidates[np.argsort(self.basis[candidates])]
            r = int(candidates[0])
            if abs(w[r]) <= opt.ratio_tol:
                raise SolverError("degenerate pivot element below ratio tolerance")

            leaving = self.basis[r]
            self.x[self.basis] = xb - theta * sw
            self.x[j] = self.x[j] + direction * theta
            hit_lower = sw[r] > 0
            self.x[leaving] = lb[r] if hit_lower else ub[r]
            self.status[leaving] = _LOWER if hit_lower else _UPPER
            if self.lower[leaving] == self.upper[leaving]:
                self.status[leaving] = _FIXED
            self.status[j] = _BASIC
            self.basis[r] = j

            # Rank-1 update of the explicit basis inverse.
            pivot_row = self.binv[r, :] / w[r]
            np.multiply(w[:, None], pivot_row[None, :], out=ger)
            ger[r, :] = self.binv[r, :] - pivot_row
            self.binv -= ger
            pivots_since_refactor += 1
            if pivots_since_refactor >= opt.refactor_every:
                self._refactor()
                pivots_since_refactor = 0

    def _refactor(self):
        B = self.A[:, self.basis]
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as err:
            raise SolverError("basis became singular during refactorization") from err
        nonbasic = np.ones(self.ncols, dtype=bool)
        nonbasic[self.basis] = False
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.binv @ rhs

    def _solve_unconstrained(self, c):
        for j in range(self.ncols):
            if self.status[j] == _FIXED:
                continue
            if c[j] > self.opt.opt_tol:
                if not np.isfinite(self.lower[j]):
                    return "unbounded", 1
                self.x[j], self.status[j] = self.lower[j], _LOWER
            elif c[j] < -self.opt.opt_tol:
                if not np.isfinite(self.upper[j]):
                    return "unbounded", 1
                self.x[j], self.status[j] = self.upper[j], _UPPER
        return "optimal", 1
