"""Hybrid zonotope data type and its closure operations.

A hybrid zonotope is the affine image of a box of continuous factors and a
set of binary factors under linear equality constraints:

    Z = { c + Gc xi_c + Gb xi_b :
          xi_c in [-1, 1]^n_g, xi_b in {-1, 1}^n_b, Ac xi_c + Ab xi_b = b }.

Values are immutable (backing arrays are marked read-only) and every
operation is a pure function, so instances are safe to share across threads.
Matrices are stored dense and exactly as constructed: no normalization and no
redundancy removal, so the generator/constraint counts of composite sets are
exact and can be checked against closed-form growth formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InfeasibleFactorError

__all__ = [
    "HybridZonotope",
    "FactorPoint",
    "IntervalBox",
    "make_hz",
    "from_box",
    "from_point",
    "linear_map",
    "translate",
    "generalized_intersection",
    "cartesian_product",
    "cartesian_power",
    "realize",
    "interval_enclosure",
    "contains_point",
    "hz_to_dict",
    "hz_from_dict",
]

DEFAULT_TOL = 1e-6


def _as_matrix(value, rows, cols, name):
    """Coerce to a float64 (rows x cols) array; None means zero columns/rows."""
    if value is None:
        if rows is None or cols is None:
            raise DimensionMismatchError(f"{name}: cannot infer shape for empty matrix")
        return np.zeros((rows, cols))
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if rows == 1 else arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    if arr.size == 0:
        shape = (rows if rows is not None else arr.shape[0], cols if cols is not None else arr.shape[1])
        return np.zeros(shape)
    return arr


def _as_vector(value, name):
    if value is None:
        return np.zeros(0)
    arr = np.asarray(value, dtype=float).reshape(-1)
    return arr


@dataclass(frozen=True)
class HybridZonotope:
    """Set <Gc, Gb, c, Ac, Ab, b>; see module docstring for the semantics."""

    center: np.ndarray     # (n,)
    gen_cont: np.ndarray   # (n, n_g)
    gen_bin: np.ndarray    # (n, n_b)
    con_cont: np.ndarray   # (n_c, n_g)
    con_bin: np.ndarray    # (n_c, n_b)
    con_rhs: np.ndarray    # (n_c,)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def n_g(self) -> int:
        return self.gen_cont.shape[1]

    @property
    def n_b(self) -> int:
        return self.gen_bin.shape[1]

    @property
    def n_c(self) -> int:
        return self.con_rhs.shape[0]

    def counts(self) -> tuple[int, int, int]:
        """(n_g, n_b, n_c) complexity triple."""
        return (self.n_g, self.n_b, self.n_c)

    def __repr__(self):
        return (f"HybridZonotope(dim={self.dim}, n_g={self.n_g}, "
                f"n_b={self.n_b}, n_c={self.n_c})")


@dataclass(frozen=True)
class FactorPoint:
    """One assignment of the continuous and binary factors of a set."""

    xi_cont: np.ndarray
    xi_bin: np.ndarray


@dataclass(frozen=True)
class IntervalBox:
    """Axis-aligned box given by componentwise lower/upper bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionMismatchError(
                f"lower length ({lo.shape[0]}) != upper length ({hi.shape[0]})")
        if np.any(lo > hi):
            raise DimensionMismatchError("lower must be <= upper componentwise")
        object.__setattr__(self, "lower", _readonly(lo))
        object.__setattr__(self, "upper", _readonly(hi))

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.setflags(write=False)
    return out


def make_hz(center, gen_cont=None, gen_bin=None, con_cont=None, con_bin=None,
            con_rhs=None) -> HybridZonotope:
    """Validate and build a hybrid zonotope.

    Any of the generator/constraint blocks may be ``None`` or empty; they are
    stored as genuine zero-column/zero-row matrices. Raises
    :class:`DimensionMismatchError` naming the offending pair of fields.
    """
    c = _as_vector(center, "center")
    n = c.shape[0]

    gc = _as_matrix(gen_cont, n, 0 if gen_cont is None else None, "gen_cont")
    if gc.shape[0] != n:
        raise DimensionMismatchError(
            f"gen_cont rows ({gc.shape[0]}) != center length ({n})")
    n_g = gc.shape[1]

    gb = _as_matrix(gen_bin, n, 0 if gen_bin is None else None, "gen_bin")
    if gb.shape[0] != n:
        raise DimensionMismatchError(
            f"gen_bin rows ({gb.shape[0]}) != center length ({n})")
    n_b = gb.shape[1]

    rhs = _as_vector(con_rhs, "con_rhs")
    n_c = rhs.shape[0]

    ac = _as_matrix(con_cont, n_c, n_g, "con_cont")
    ab = _as_matrix(con_bin, n_c, n_b, "con_bin")
    if ac.shape[0] != ab.shape[0]:
        raise DimensionMismatchError(
            f"con_cont rows ({ac.shape[0]}) != con_bin rows ({ab.shape[0]})")
    if ac.shape[0] != n_c:
        raise DimensionMismatchError(
            f"con_cont rows ({ac.shape[0]}) != con_rhs length ({n_c})")
    if ac.shape[1] != n_g:
        raise DimensionMismatchError(
            f"con_cont columns ({ac.shape[1]}) != gen_cont columns ({n_g})")
    if ab.shape[1] != n_b:
        raise DimensionMismatchError(
            f"con_bin columns ({ab.shape[1]}) != gen_bin columns ({n_b})")

    return HybridZonotope(
        center=_readonly(c),
        gen_cont=_readonly(gc),
        gen_bin=_readonly(gb),
        con_cont=_readonly(ac),
        con_bin=_readonly(ab),
        con_rhs=_readonly(rhs),
    )


def from_box(lower, upper) -> HybridZonotope:
    """Axis-aligned box as an unconstrained zonotope (diagonal generators)."""
    box = IntervalBox(lower, upper)
    mid = (box.upper + box.lower) / 2.0
    half = (box.upper - box.lower) / 2.0
    return make_hz(mid, np.diag(half))


def from_point(point) -> HybridZonotope:
    """Singleton set {point} with no generators."""
    return make_hz(np.asarray(point, dtype=float))


def linear_map(mat, z: HybridZonotope) -> HybridZonotope:
    """Image { R x : x in Z } of Z under the matrix R.

    Only the value map changes; the factor space and constraints are shared
    with the input, so all complexity counts are preserved.
    """
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.shape[1] != z.dim:
        raise DimensionMismatchError(
            f"matrix columns ({mat.shape[1]}) != set dimension ({z.dim})")
    return make_hz(mat @ z.center, mat @ z.gen_cont, mat @ z.gen_bin,
                   z.con_cont, z.con_bin, z.con_rhs)


def translate(z: HybridZonotope, offset) -> HybridZonotope:
    """Z + offset."""
    offset = np.asarray(offset, dtype=float).reshape(-1)
    if offset.shape[0] != z.dim:
        raise DimensionMismatchError(
            f"offset length ({offset.shape[0]}) != set dimension ({z.dim})")
    return make_hz(z.center + offset, z.gen_cont, z.gen_bin,
                   z.con_cont, z.con_bin, z.con_rhs)


def affine_map(mat, z: HybridZonotope, offset) -> HybridZonotope:
    """R Z + offset in one step."""
    return translate(linear_map(mat, z), offset)


def generalized_intersection(z1: HybridZonotope, mat, z2: HybridZonotope,
                             *, z1_factors_first: bool = True) -> HybridZonotope:
    """{ x in Z1 : R x in Z2 }.

    The result lives in Z1's ambient space. Its factor space concatenates the
    factors of both operands (Z1's first by default) and gains rows(R) new
    equality constraints coupling them, so the counts add up exactly:
    n_g = n_g1 + n_g2, n_b = n_b1 + n_b2, n_c = n_c1 + n_c2 + rows(R).

    ``z1_factors_first=False`` places Z2's factor columns first; the set is
    unchanged (factor relabeling) but composite constructions that later need
    Z2's generator columns in the leading block rely on it.
    """
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.shape[1] != z1.dim:
        raise DimensionMismatchError(
            f"matrix columns ({mat.shape[1]}) != first set dimension ({z1.dim})")
    if mat.shape[0] != z2.dim:
        raise DimensionMismatchError(
            f"matrix rows ({mat.shape[0]}) != second set dimension ({z2.dim})")

    n, m = z1.dim, mat.shape[0]
    rg1, rg2 = z1.n_g, z2.n_g
    rb1, rb2 = z1.n_b, z2.n_b
    rc1, rc2 = z1.n_c, z2.n_c

    def hcat(a_first, a_second, swap):
        return np.hstack([a_second, a_first]) if swap else np.hstack([a_first, a_second])

    swap = not z1_factors_first
    gc = hcat(z1.gen_cont, np.zeros((n, rg2)), swap)
    gb = hcat(z1.gen_bin, np.zeros((n, rb2)), swap)

    ac = np.vstack([
        hcat(z1.con_cont, np.zeros((rc1, rg2)), swap),
        hcat(np.zeros((rc2, rg1)), z2.con_cont, swap),
        hcat(mat @ z1.gen_cont, -z2.gen_cont, swap),
    ])
    ab = np.vstack([
        hcat(z1.con_bin, np.zeros((rc1, rb2)), swap),
        hcat(np.zeros((rc2, rb1)), z2.con_bin, swap),
        hcat(mat @ z1.gen_bin, -z2.gen_bin, swap),
    ])
    rhs = np.concatenate([z1.con_rhs, z2.con_rhs, z2.center - mat @ z1.center])
    return make_hz(z1.center, gc, gb, ac, ab, rhs)


def cartesian_product(z1: HybridZonotope, z2: HybridZonotope) -> HybridZonotope:
    """Z1 x Z2 by block-diagonal stacking of generators and constraints."""
    n1, n2 = z1.dim, z2.dim
    gc = np.block([
        [z1.gen_cont, np.zeros((n1, z2.n_g))],
        [np.zeros((n2, z1.n_g)), z2.gen_cont],
    ])
    gb = np.block([
        [z1.gen_bin, np.zeros((n1, z2.n_b))],
        [np.zeros((n2, z1.n_b)), z2.gen_bin],
    ])
    ac = np.block([
        [z1.con_cont, np.zeros((z1.n_c, z2.n_g))],
        [np.zeros((z2.n_c, z1.n_g)), z2.con_cont],
    ])
    ab = np.block([
        [z1.con_bin, np.zeros((z1.n_c, z2.n_b))],
        [np.zeros((z2.n_c, z1.n_b)), z2.con_bin],
    ])
    return make_hz(
        np.concatenate([z1.center, z2.center]),
        gc, gb, ac, ab,
        np.concatenate([z1.con_rhs, z2.con_rhs]),
    )


def cartesian_power(z: HybridZonotope, k: int) -> HybridZonotope:
    """k-fold Cartesian product Z x ... x Z; k must be >= 1."""
    if k < 1:
        raise ValueError(f"cartesian power requires k >= 1, got {k}")
    out = z
    for _ in range(k - 1):
        out = cartesian_product(out, z)
    return out


def check_factor_point(z: HybridZonotope, point: FactorPoint,
                       tol: float = DEFAULT_TOL) -> None:
    """Raise InfeasibleFactorError unless the factor point is feasible for Z."""
    xc = np.asarray(point.xi_cont, dtype=float).reshape(-1)
    xb = np.asarray(point.xi_bin, dtype=float).reshape(-1)
    if xc.shape[0] != z.n_g:
        raise DimensionMismatchError(
            f"xi_cont length ({xc.shape[0]}) != continuous generators ({z.n_g})")
    if xb.shape[0] != z.n_b:
        raise DimensionMismatchError(
            f"xi_bin length ({xb.shape[0]}) != binary generators ({z.n_b})")
    if xc.size and np.max(np.abs(xc)) > 1.0 + tol:
        raise InfeasibleFactorError(
            f"continuous factor out of [-1, 1]: max |xi_c| = {np.max(np.abs(xc)):.6g}")
    if xb.size and np.any(np.abs(np.abs(xb) - 1.0) > tol):
        raise InfeasibleFactorError("binary factors must be exactly +/-1")
    if z.n_c:
        residual = z.con_cont @ xc + z.con_bin @ xb - z.con_rhs
        worst = float(np.max(np.abs(residual)))
        if worst > tol:
            raise InfeasibleFactorError(
                f"equality residual {worst:.3g} exceeds tolerance {tol:.3g}")


def realize(z: HybridZonotope, point: FactorPoint, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Evaluate the affine factor map at a feasible factor point."""
    check_factor_point(z, point, tol)
    xc = np.asarray(point.xi_cont, dtype=float).reshape(-1)
    xb = np.asarray(point.xi_bin, dtype=float).reshape(-1)
    return z.center + z.gen_cont @ xc + z.gen_bin @ xb


def interval_enclosure(z: HybridZonotope) -> IntervalBox:
    """Box guaranteed to contain Z.

    Ignores the equality constraints: center +/- row-wise absolute sums of
    both generator blocks. Conservative but cheap; exact for plain boxes.
    """
    radius = np.abs(z.gen_cont).sum(axis=1) + np.abs(z.gen_bin).sum(axis=1)
    return IntervalBox(z.center - radius, z.center + radius)


def contains_point(z: HybridZonotope, x, tol: float = DEFAULT_TOL, *,
                   witness_hint: FactorPoint | None = None, **solver_kwargs) -> bool:
    """Exact membership test via a feasibility MILP over the factors.

    Fast path: a point outside the interval enclosure can never be a member,
    so the solver is skipped. A caller that already knows a candidate factor
    point may pass it as ``witness_hint`` (the usual MIP-start idea): the
    hint is verified against the bounds, the equality constraints and the
    realization residual, and only if it fails does the solver run. Solver
    failures raise, they never read as ``False``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != z.dim:
        raise DimensionMismatchError(
            f"point length ({x.shape[0]}) != set dimension ({z.dim})")
    if not interval_enclosure(z).contains(x, tol):
        return False
    if witness_hint is not None and _hint_realizes(z, witness_hint, x, tol):
        return True
    from . import milp

    return milp.membership_check(z, x, tol=tol, **solver_kwargs)


def _hint_realizes(z: HybridZonotope, point: FactorPoint, x, tol: float) -> bool:
    try:
        realized = realize(z, point, tol)
    except (InfeasibleFactorError, DimensionMismatchError):
        return False
    return bool(np.max(np.abs(realized - x), initial=0.0) <= tol)


def hz_to_dict(z: HybridZonotope) -> dict:
    """JSON-ready dict with keys center/Gc/Gb/Ac/Ab/b; empty blocks omitted."""
    out = {"center": z.center.tolist()}
    if z.n_g:
        out["Gc"] = z.gen_cont.tolist()
    if z.n_b:
        out["Gb"] = z.gen_bin.tolist()
    if z.n_c:
        out["Ac"] = z.con_cont.tolist()
        out["Ab"] = z.con_bin.tolist()
        out["b"] = z.con_rhs.tolist()
    return out


def hz_from_dict(data: dict) -> HybridZonotope:
    """Inverse of :func:`hz_to_dict`; absent or empty keys mean zero blocks."""
    center = _as_vector(data["center"], "center")
    n = center.shape[0]

    def block(key, cols_hint):
        value = data.get(key)
        if value is None or (hasattr(value, "__len__") and len(value) == 0):
            return None
        return value

    gc = block("Gc", None)
    gb = block("Gb", None)
    rhs = data.get("b")
    if rhs is not None and len(rhs) == 0:
        rhs = None
    n_c = len(rhs) if rhs is not None else 0
    n_g = len(gc[0]) if gc is not None else 0
    n_b = len(gb[0]) if gb is not None else 0
    ac = data.get("Ac")
    ab = data.get("Ab")
    ac = np.asarray(ac, dtype=float).reshape(n_c, n_g) if ac is not None and n_c else None
    ab = np.asarray(ab, dtype=float).reshape(n_c, n_b) if ab is not None and n_c else None
    return make_hz(center, gc, gb, ac, ab, rhs)
