"""Dense two-phase simplex for problems of the form min c'x, Ax <= b, x >= 0.

Small and deterministic on purpose: the selector's linearized programs
have 2p variables and 2p rows at desk scale, where a dense tableau with
Bland's anti-cycling rule is both fast enough and immune to cycling.
Entries below PIVOT_TOL are treated as zero throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["LinearProgram", "LpSolution", "solve_lp", "PIVOT_TOL"]

PIVOT_TOL = 1e-9

_MAX_ITERATIONS = 200_000


@dataclass(frozen=True)
class LinearProgram:
    """min objective . x  subject to  constraints @ x <= rhs,  x >= 0."""

    objective: np.ndarray
    constraints: np.ndarray
    rhs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.objective, dtype=float)
        A = np.atleast_2d(np.asarray(self.constraints, dtype=float))
        b = np.asarray(self.rhs, dtype=float)
        if c.ndim != 1 or b.ndim != 1:
            raise ValueError("objective and rhs must be vectors")
        if A.shape != (b.size, c.size):
            raise ValueError(
                f"constraint matrix {A.shape} does not match {b.size} rows x {c.size} vars"
            )
        if c.size < 1 or b.size < 1:
            raise ValueError("need at least one variable and one constraint")
        for arr, name in ((c, "objective"), (A, "constraints"), (b, "rhs")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraints", A)
        object.__setattr__(self, "rhs", b)


@dataclass(frozen=True)
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    x: Optional[np.ndarray]
    objective_value: float
    iterations: int
    #: Dual vector y (<= 0) with b'y = objective and A'y <= c at optimality;
    #: exposed for certificate checks, None unless optimal.
    duals: Optional[np.ndarray]


def _bland_step(T, obj_row, basis, allowed):
    """One Bland pivot. Returns 'optimal', 'unbounded' or the pivot (row, col)."""
    enter = -1
    for j in allowed:
        if obj_row[j] < -PIVOT_TOL:
            enter = j
            break
    if enter < 0:
        return "optimal"
    col = T[:, enter]
    best_ratio = np.inf
    leave = -1
    for i in range(T.shape[0]):
        if col[i] > PIVOT_TOL:
            ratio = T[i, -1] / col[i]
            if ratio < best_ratio - PIVOT_TOL or (
                ratio < best_ratio + PIVOT_TOL
                and (leave < 0 or basis[i] < basis[leave])
            ):
                best_ratio = ratio
                leave = i
    if leave < 0:
        return "unbounded"
    return leave, enter


def _pivot(T, obj_row, basis, row, col) -> None:
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and abs(T[i, col]) > PIVOT_TOL:
            T[i] -= T[i, col] * T[row]
        elif i != row:
            T[i, col] = 0.0
    if abs(obj_row[col]) > PIVOT_TOL:
        obj_row -= obj_row[col] * T[row]
    else:
        obj_row[col] = 0.0
    basis[row] = col


def _run_simplex(T, obj_row, basis, allowed, iterations):
    while True:
        step = _bland_step(T, obj_row, basis, allowed)
        if isinstance(step, str):
            return step, iterations
        iterations += 1
        if iterations > _MAX_ITERATIONS:
            raise RuntimeError("simplex iteration cap exceeded")
        _pivot(T, obj_row, basis, *step)


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Optimal basic solution of ``lp`` by two-phase dense simplex.

    Never raises for infeasible or unbounded inputs; those come back in
    ``status``.  Deterministic: identical inputs take identical pivots.
    """
    c = lp.objective
    A = lp.constraints
    b = lp.rhs
    k, m = A.shape

    sign = np.where(b < 0.0, -1.0, 1.0)
    need_art = np.flatnonzero(b < 0.0)
    n_art = need_art.size
    ncols = m + k + n_art

    T = np.zeros((k, ncols + 1))
    T[:, :m] = A * sign[:, None]
    T[np.arange(k), m + np.arange(k)] = sign
    T[:, -1] = b * sign
    basis = np.empty(k, dtype=int)
    basis[:] = m + np.arange(k)
    for a, i in enumerate(need_art):
        T[i, m + k + a] = 1.0
        basis[i] = m + k + a

    iterations = 0
    keep = np.ones(k, dtype=bool)
    if n_art:
        obj_row = np.zeros(ncols + 1)
        obj_row[m + k : -1] = 1.0  # phase-1 cost: sum of artificials
        for i in need_art:
            obj_row -= T[i]
        allowed = range(m + k)  # artificials may leave, never re-enter
        status, iterations = _run_simplex(T, obj_row, basis, allowed, iterations)
        if status != "optimal" or -obj_row[-1] > 1e-7:
            return LpSolution("infeasible", None, np.nan, iterations, None)
        # Drive leftover zero-level artificials out of the basis.
        for i in range(k):
            if basis[i] >= m + k:
                piv = next(
                    (j for j in range(m + k) if abs(T[i, j]) > PIVOT_TOL), None
                )
                if piv is None:
                    keep[i] = False  # redundant row
                else:
                    _pivot(T, obj_row, basis, i, piv)
        if not keep.all():
            T = T[keep]
            basis = basis[keep]
            sign = sign[keep]
        T = np.hstack([T[:, : m + k], T[:, [-1]]])  # drop artificial columns

    obj_row = np.zeros(m + k + 1)
    obj_row[:m] = c
    for i in range(T.shape[0]):
        if basis[i] < m and abs(c[basis[i]]) > 0.0:
            obj_row -= c[basis[i]] * T[i]
    status, iterations = _run_simplex(T, obj_row, basis, range(m + k), iterations)
    if status == "unbounded":
        return LpSolution("unbounded", None, -np.inf, iterations, None)

    x_full = np.zeros(m + k)
    x_full[basis] = T[:, -1]
    x = x_full[:m]
    value = float(c @ x)

    # Duals from the final basis: solve y'B = c_B on the (sign-adjusted) rows,
    # then undo the row negations.
    D = np.zeros((T.shape[0], m + k))
    D[:, :m] = A[keep] * sign[:, None]
    D[np.arange(T.shape[0]), m + np.flatnonzero(keep)] = sign
    cost_full = np.concatenate([c, np.zeros(k)])
    B = D[:, basis]
    y_rows = np.linalg.solve(B.T, cost_full[basis])
    duals = np.zeros(k)
    duals[np.flatnonzero(keep)] = sign * y_rows

    return LpSolution("optimal", x, value, iterations, duals)
