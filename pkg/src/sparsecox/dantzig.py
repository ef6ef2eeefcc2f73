"""The l1-minimal coefficient estimate under a sup-norm score constraint.

The estimator minimizes ||beta||_1 over the set {beta : ||U_n(beta)||_inf
<= gamma}.  The constraint is smooth with positive semidefinite negated
Jacobian, so we attack it by sequential linearization: starting from 0,
each step solves the linear program

    minimize ||b||_1  subject to  ||U_n(b_k) - J_n(b_k)(b - b_k)||_inf <= gamma

and convergence is declared on the EXACT nonlinear constraint, never the
linearized one, so a converged fit always carries an unconditional
feasibility certificate.

For large p the LP is solved over a working set of coordinates (both
constraint rows and variables), grown until the full problem's optimality
conditions hold; the result matches the dense computation within solver
tolerances, and the code falls back to the dense path if the working set
fails to settle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import SurvivalDataset
from .exceptions import GammaInfeasibleError
from .partial_likelihood import (
    neg_hessian,
    neg_hessian_columns,
    neg_hessian_matvec,
    score,
)
from .simplex import LinearProgram, solve_lp

__all__ = [
    "TuningSchedule",
    "SolverControl",
    "DantzigFit",
    "gamma_value",
    "fit_dantzig",
    "gamma_path",
    "FEASIBILITY_SLACK",
]

#: Relative slack on the exact-score feasibility certificate.
FEASIBILITY_SLACK = 1e-6


@dataclass(frozen=True)
class TuningSchedule:
    """Tuning-rate parameters for gamma = c_gamma * n^(-alpha) * log p.

    ``zeta`` parameterizes the asymptotic regime (0 < zeta < alpha <= 1/2)
    and is validated but never enters the computation.  ``explicit_gamma``
    bypasses the schedule entirely.
    """

    alpha: float = 0.5
    zeta: float = 0.25
    c_gamma: float = 0.5
    explicit_gamma: Optional[float] = None

    def __post_init__(self) -> None:
        if not (0.0 < self.zeta < self.alpha <= 0.5):
            raise ValueError(
                f"need 0 < zeta < alpha <= 1/2, got zeta={self.zeta}, alpha={self.alpha}"
            )
        if self.c_gamma <= 0.0:
            raise ValueError(f"c_gamma must be positive, got {self.c_gamma}")
        if self.explicit_gamma is not None and self.explicit_gamma <= 0.0:
            raise ValueError(f"explicit_gamma must be positive, got {self.explicit_gamma}")


@dataclass(frozen=True)
class SolverControl:
    max_outer: int = 50
    tol_step: float = 1e-7
    #: Above this dimension the LP runs on a working set of coordinates.
    dense_threshold: int = 150
    max_working_rounds: int = 30

    def __post_init__(self) -> None:
        if self.max_outer < 1 or self.max_working_rounds < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.tol_step <= 0.0:
            raise ValueError("tol_step must be positive")


@dataclass(frozen=True)
class DantzigFit:
    """Outcome of one selector run.

    ``feasibility_residual`` is ||U_n(beta_hat)||_inf from the exact score;
    ``trace`` records (l1 norm, residual) per outer iteration.  ``error``
    is set (and ``converged`` False) when a path entry failed.
    """

    beta_hat: Optional[np.ndarray]
    gamma: float
    outer_iterations: int
    feasibility_residual: float
    converged: bool
    trace: tuple = ()
    error: Optional[str] = None


def gamma_value(n: int, p: int, sched: TuningSchedule = TuningSchedule()) -> float:
    """Realized tuning level: explicit override or c_gamma * n^-alpha * log p."""
    if sched.explicit_gamma is not None:
        return float(sched.explicit_gamma)
    if p < 2:
        raise ValueError(f"schedule needs p >= 2 (log p degenerate), got p={p}")
    if n < 1:
        raise ValueError(f"need n >= 1, got n={n}")
    return sched.c_gamma * n ** (-sched.alpha) * math.log(p)


def _linearized_lp(J_cols, r, gamma, rows):
    """LP data for min ||b||_1 s.t. |r - J d|_inf <= gamma on given rows.

    Variables are the split d = d+ - d- over the columns of J_cols.
    """
    Jr = J_cols[rows]
    A = np.block([[Jr, -Jr], [-Jr, Jr]])
    b = np.concatenate([r[rows] + gamma, gamma - r[rows]])
    c = np.ones(2 * Jr.shape[1])
    return LinearProgram(c, A, b)


def _solve_dense(ds, beta, u, gamma):
    """Full linearized LP; returns the new beta or None when infeasible."""
    J = neg_hessian(ds, beta)
    r = u + J @ beta
    sol = solve_lp(_linearized_lp(J, r, gamma, np.arange(ds.p)))
    if sol.status != "optimal":
        return None
    return sol.x[: ds.p] - sol.x[ds.p :]


def _solve_working_set(ds, beta, u, gamma, ctrl):
    """Working-set linearized LP.

    Keeps a coordinate set W serving as both LP variables and constraint
    rows, grows it on primal violations (rows) and dual reduced-cost
    violations (columns), and certifies against the full problem with one
    O(n p) Hessian product.  Falls back to the dense path when the set
    does not settle within ``ctrl.max_working_rounds``.
    """
    p = ds.p
    r0 = u if not beta.any() else u + neg_hessian_matvec(ds, beta, beta)
    work = set(np.flatnonzero(np.abs(r0) > gamma).tolist())
    work.add(int(np.argmax(np.abs(r0))))
    work |= set(np.flatnonzero(beta != 0.0).tolist())

    for _ in range(ctrl.max_working_rounds):
        W = np.array(sorted(work), dtype=int)
        J_cols = neg_hessian_columns(ds, beta, W)
        sol = solve_lp(_linearized_lp(J_cols, r0, gamma, W))
        if sol.status != "optimal":
            # Restricted rows cannot go infeasible (0 satisfies them only if
            # |r0| <= gamma on W, which fails by construction) unless the
            # variable set is too small; widen by the largest residuals.
            outside = np.setdiff1d(np.arange(p), W)
            if outside.size == 0:
                return None
            take = outside[np.argsort(-np.abs(r0[outside]))][:25]
            work |= set(take.tolist())
            continue
        m = W.size
        d = sol.x[:m] - sol.x[m:]
        cand = np.zeros(p)
        cand[W] = d

        # Primal check on every row of the full linearized system.
        lin_res = r0 - J_cols @ d
        bad_rows = np.flatnonzero(np.abs(lin_res) > gamma * (1.0 + 1e-9))
        # Dual check: out-of-set columns must price out.
        y = sol.duals
        v = np.zeros(p)
        v[W] = (y[:m] - y[m:]) if y is not None else 0.0
        g = neg_hessian_matvec(ds, beta, v)
        bad_cols = np.flatnonzero(np.abs(g) > 1.0 + 1e-7)
        grow = (set(bad_rows.tolist()) | set(bad_cols.tolist())) - work
        if not grow:
            return cand
        work |= grow
    return _solve_dense(ds, beta, u, gamma)


def fit_dantzig(
    ds: SurvivalDataset,
    sched: TuningSchedule = TuningSchedule(),
    ctrl: SolverControl = SolverControl(),
    start: Optional[np.ndarray] = None,
) -> DantzigFit:
    """Sequential-linearization solve of the l1/score-ball program.

    ``start`` warm-starts the outer loop (used by gamma_path); the origin
    short-circuit still applies since 0 has minimal norm whenever feasible.

    Raises GammaInfeasibleError when a linearized subproblem admits no
    solution at this gamma.
    """
    gamma = gamma_value(ds.n, ds.p, sched)
    u0 = score(ds, np.zeros(ds.p))
    res0 = float(np.max(np.abs(u0)))
    if res0 <= gamma:
        return DantzigFit(
            beta_hat=np.zeros(ds.p),
            gamma=gamma,
            outer_iterations=1,
            feasibility_residual=res0,
            converged=True,
            trace=((0.0, res0),),
        )

    beta = np.zeros(ds.p) if start is None else np.asarray(start, dtype=float).copy()
    u = u0 if start is None else score(ds, beta)
    trace = []
    for k in range(1, ctrl.max_outer + 1):
        if ds.p > ctrl.dense_threshold:
            new = _solve_working_set(ds, beta, u, gamma, ctrl)
        else:
            new = _solve_dense(ds, beta, u, gamma)
        if new is None:
            raise GammaInfeasibleError(
                f"linearized subproblem infeasible at gamma={gamma:.6g}; "
                "increase gamma (or c_gamma) and refit"
            )
        step = float(np.abs(new - beta).sum())
        u = score(ds, new)
        residual = float(np.max(np.abs(u)))
        trace.append((float(np.abs(new).sum()), residual))
        beta = new
        if step <= ctrl.tol_step and residual <= gamma * (1.0 + FEASIBILITY_SLACK):
            return DantzigFit(beta, gamma, k, residual, True, tuple(trace))
    return DantzigFit(beta, gamma, ctrl.max_outer, residual, False, tuple(trace))


def gamma_path(
    ds: SurvivalDataset,
    gammas: Sequence[float],
    ctrl: SolverControl = SolverControl(),
) -> list[DantzigFit]:
    """One fit per gamma (descending), warm-starting each from the last.

    A failing entry is recorded with ``error`` set instead of aborting the
    path.  The l1 norms of converged fits must be non-increasing in gamma;
    a violation beyond 1e-8 signals a solver defect and raises.
    """
    gammas = [float(g) for g in gammas]
    if not gammas:
        raise ValueError("gamma list is empty")
    if any(g <= 0.0 for g in gammas):
        raise ValueError("gammas must be positive")
    if any(a < b for a, b in zip(gammas, gammas[1:])):
        raise ValueError("gammas must be non-ascending")

    fits: list[DantzigFit] = []
    warm: Optional[np.ndarray] = None
    last_norm = None
    for g in gammas:
        sched = TuningSchedule(explicit_gamma=g)
        try:
            fit = fit_dantzig(ds, sched, ctrl, start=warm)
        except (GammaInfeasibleError, FloatingPointError) as exc:
            fits.append(
                DantzigFit(None, g, 0, math.inf, False, (), error=str(exc))
            )
            continue
        fits.append(fit)
        if fit.converged:
            norm = float(np.abs(fit.beta_hat).sum())
            if last_norm is not None and norm < last_norm - 1e-8:
                raise RuntimeError(
                    "l1 norm decreased along a descending gamma path "
                    f"({last_norm} -> {norm}); solver certificate violated"
                )
            last_norm = norm
            warm = fit.beta_hat
    return fits
