"""Dense two-phase simplex for the restricted OPF subproblems.

Problems are tiny (a few hundred rows at most), so a self-contained
dense tableau with Bland's rule keeps results deterministic without an
external solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, Unbounded
from .powerflow import SplitLoadVector
from .restriction import PolyhedralRestriction

_PIVOT_TOL = 1e-9   # entries below this are elimination noise, never pivots
_SNAP_TOL = 1e-11   # zero out round-off residue after each pivot
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class LinearObjective:
    """Linear function of the stacked split load vector."""

    weights: np.ndarray
    direction: str = "maximize"

    def __post_init__(self):
        arr = np.asarray(self.weights, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("objective weights must be finite")
        object.__setattr__(self, "weights", arr)
        if self.direction not in ("maximize", "minimize"):
            raise ValueError("direction must be 'maximize' or 'minimize'")

    def value(self, s: SplitLoadVector) -> float:
        return float(self.weights @ s.stacked())

    @classmethod
    def active_load(cls, n: int, direction: str = "maximize") -> "LinearObjective":
        """Sum of net active loads, the objective of both benchmark runs."""
        w = np.zeros(4 * n)
        w[:n] = 1.0
        w[2 * n : 3 * n] = -1.0
        return cls(weights=w, direction=direction)


@dataclass(frozen=True)
class BoxBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        up = np.asarray(self.upper, dtype=np.float64)
        if lo.shape != up.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-D with equal shapes")
        if np.any(lo < 0) or np.any(up < lo):
            raise ValueError("bounds must satisfy 0 <= lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @classmethod
    def from_limits(cls, n, pc=(0.0, np.inf), qc=(0.0, np.inf),
                    pg=(0.0, np.inf), qg=(0.0, np.inf)) -> "BoxBounds":
        lo = np.concatenate([np.full(n, lim[0]) for lim in (pc, qc, pg, qg)])
        up = np.concatenate([np.full(n, lim[1]) for lim in (pc, qc, pg, qg)])
        return cls(lower=lo, upper=up)


@dataclass(frozen=True)
class LpSolution:
    s_star: SplitLoadVector
    value: float
    # Dual vector of the standard-form program: feasible for the dual of
    # min c~'w s.t. A w = b, w >= 0; kept for internal certificates.
    duals: np.ndarray
    standard_a: np.ndarray
    standard_b: np.ndarray
    standard_c: np.ndarray


def _pivot(tableau: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for i in range(tableau.shape[0]):
        if i != row and tableau[i, col] != 0.0:
            tableau[i] -= tableau[i, col] * tableau[row]
    tableau[np.abs(tableau) < _SNAP_TOL] = 0.0
    tableau[row, col] = 1.0
    basis[row] = col


def _bland(tableau: np.ndarray, basis: list[int], ncols: int) -> None:
    """Run the simplex loop to optimality on the current cost row."""
    m = tableau.shape[0] - 1
    while True:
        enter = -1
        for j in range(ncols):
            if tableau[-1, j] < -_PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return
        leave = -1
        best_ratio = np.inf
        for i in range(m):
            a = tableau[i, enter]
            if a > _PIVOT_TOL:
                ratio = tableau[i, -1] / a
                if ratio < best_ratio - 1e-12 or (
                    abs(ratio - best_ratio) <= 1e-12
                    and (leave < 0 or basis[i] < basis[leave])
                ):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            raise Unbounded("objective unbounded over the feasible region")
        _pivot(tableau, basis, leave, enter)


def _solve_standard(a_eq: np.ndarray, b_eq: np.ndarray, c: np.ndarray):
    """Two-phase simplex for min c'w s.t. a_eq w = b_eq, w >= 0."""
    m, n = a_eq.shape
    a = a_eq.copy()
    b = b_eq.copy()
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    # Phase 1: artificial variable per row.
    ncols = n + m
    tableau = np.zeros((m + 1, ncols + 1))
    tableau[:m, :n] = a
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = b
    basis = list(range(n, n + m))
    tableau[-1, :] = -tableau[:m, :].sum(axis=0)
    tableau[-1, n : n + m] = 0.0
    _bland(tableau, basis, ncols)
    if tableau[-1, -1] < -_FEAS_TOL:
        raise Infeasible("phase-1 optimum is positive: empty feasible region")

    # Drive remaining artificials out of the basis.
    rows_kept = list(range(m))
    for i in range(m - 1, -1, -1):
        if basis[i] >= n:
            pivot_col = -1
            for j in range(n):
                if abs(tableau[i, j]) > _PIVOT_TOL:
                    pivot_col = j
                    break
            if pivot_col >= 0:
                _pivot(tableau, basis, i, pivot_col)
            else:
                # Redundant row: remove it.
                tableau = np.delete(tableau, i, axis=0)
                basis.pop(i)
                rows_kept.pop(i)
    m = len(basis)

    # Phase 2 cost row over the original columns.
    tableau = np.hstack([tableau[:, :n], tableau[:, -1:]])
    tableau[-1, :] = 0.0
    tableau[-1, :n] = c
    for i in range(m):
        if c[basis[i]] != 0.0:
            tableau[-1] -= c[basis[i]] * tableau[i]
    _bland(tableau, basis, n)

    # Read the vertex from a fresh solve against the original (sign-
    # normalized) matrices, discarding drift accumulated in the tableau.
    w = np.zeros(n)
    a_r = a[rows_kept][:, basis]
    try:
        x_basis = np.linalg.solve(a_r, b[rows_kept])
    except np.linalg.LinAlgError:
        x_basis = np.array([tableau[i, -1] for i in range(m)])
    for i in range(m):
        w[basis[i]] = max(x_basis[i], 0.0)
    # Dual of the reduced equality system from the same basis.
    y = np.full(a_eq.shape[0], np.nan)
    try:
        y_r = np.linalg.solve(a_r.T, c[basis])
        sign = np.where(flip[rows_kept], -1.0, 1.0)
        y[rows_kept] = sign * y_r
    except np.linalg.LinAlgError:
        pass
    return w, float(c @ w), y


def solve(
    p: PolyhedralRestriction,
    obj: LinearObjective,
    bounds: BoxBounds,
    extra_equalities: list[tuple[np.ndarray, float]] | None = None,
) -> tuple[SplitLoadVector, float]:
    """Optimize a linear objective over the restriction plus box bounds.

    Raises Infeasible when the region is empty and Unbounded when the
    optimum is unbounded (possible only with infinite upper bounds).
    """
    solution = solve_detailed(p, obj, bounds, extra_equalities)
    return solution.s_star, solution.value


def solve_detailed(
    p: PolyhedralRestriction,
    obj: LinearObjective,
    bounds: BoxBounds,
    extra_equalities: list[tuple[np.ndarray, float]] | None = None,
) -> LpSolution:
    dim = p.lhs.shape[0]
    if obj.weights.shape != (dim,) or bounds.lower.shape != (dim,):
        raise ValueError("objective/bounds dimension does not match restriction")

    lower = bounds.lower
    upper = bounds.upper
    # Shift x = y + lower so y >= 0.
    g_rows = [p.lhs]
    h_vals = [p.rhs - p.lhs @ lower]
    finite = np.isfinite(upper)
    if finite.any():
        rows = np.eye(dim)[finite]
        g_rows.append(rows)
        h_vals.append(upper[finite] - lower[finite])
    g = np.vstack(g_rows)
    h = np.concatenate(h_vals)

    eq_rows = []
    eq_vals = []
    for row, rhs in extra_equalities or []:
        row = np.asarray(row, dtype=float)
        if row.shape != (dim,):
            raise ValueError("equality row dimension does not match")
        eq_rows.append(row)
        eq_vals.append(float(rhs) - float(row @ lower))

    n_ineq = g.shape[0]
    n_eq = len(eq_rows)
    # Standard form: [G I; E 0] (y, slack) = (h, e), all vars >= 0.
    a_std = np.zeros((n_ineq + n_eq, dim + n_ineq))
    a_std[:n_ineq, :dim] = g
    a_std[:n_ineq, dim:] = np.eye(n_ineq)
    if n_eq:
        a_std[n_ineq:, :dim] = np.vstack(eq_rows)
    b_std = np.concatenate([h, np.asarray(eq_vals)])
    c_std = np.zeros(dim + n_ineq)
    sign = -1.0 if obj.direction == "maximize" else 1.0
    c_std[:dim] = sign * obj.weights

    w, opt, y = _solve_standard(a_std, b_std, c_std)
    x = w[:dim] + lower
    value = float(obj.weights @ x)

    residual = p.lhs @ x - p.rhs
    if residual.max() > 1e-7:
        raise RuntimeError("simplex returned a point violating the restriction")
    return LpSolution(
        s_star=SplitLoadVector.from_stacked(np.maximum(x, 0.0)),
        value=value,
        duals=y,
        standard_a=a_std,
        standard_b=b_std,
        standard_c=c_std,
    )
