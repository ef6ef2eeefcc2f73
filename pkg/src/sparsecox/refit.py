"""Threshold support selection and the restricted maximum-likelihood refit.

Selection keeps coordinates whose selector estimate strictly exceeds the
tuning level gamma.  The refit solves the score equation restricted to
the selected set by damped Newton-Raphson (step halving on the restricted
log partial likelihood), leaving every off-support coordinate at exactly
zero.  A refit that stops making likelihood progress while the score is
still large, or whose coefficients run past ``max_beta``, is reported as
non-converged with a monotone-likelihood flag instead of crashing; with
bounded covariates such behavior signals separation in the data.

The information matrix is the restricted negated Hessian at the refit
point (observed information); its inverse over n is the Wald covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dantzig import DantzigFit
from .dataset import SurvivalDataset
from .exceptions import (
    ScoreOverflowError,
    SingularInformationError,
    UnconvergedFitError,
)
from .partial_likelihood import evaluate, neg_hessian
from .stats import normal_quantile

__all__ = [
    "SelectedSupport",
    "NewtonControl",
    "RefitResult",
    "select_support",
    "refit_mle",
    "wald_inference",
]


@dataclass(frozen=True)
class SelectedSupport:
    """Indices with |beta_hat_j| strictly above the threshold, ascending."""

    indices: tuple[int, ...]
    threshold: float
    source_fit: Optional[DantzigFit] = None

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class NewtonControl:
    max_iter: int = 100
    tol: float = 1e-8
    #: Coefficient magnitude treated as monotone-likelihood divergence.
    max_beta: float = 50.0
    start: str = "dantzig"  # "dantzig" | "zero"
    min_loglik_increase: float = 1e-14

    def __post_init__(self) -> None:
        if self.start not in ("dantzig", "zero"):
            raise ValueError(f"start must be 'dantzig' or 'zero', got {self.start!r}")
        if self.max_iter < 1 or self.tol <= 0.0 or self.max_beta <= 0.0:
            raise ValueError("max_iter, tol and max_beta must be positive")


@dataclass(frozen=True)
class RefitResult:
    support: SelectedSupport
    beta2: np.ndarray  # length p, exactly zero off support
    info_matrix: np.ndarray  # |T| x |T| restricted J_n at beta2
    covariance: Optional[np.ndarray]  # inv(info)/n when converged
    wald_intervals: tuple  # (lo, hi) per selected coordinate, default level
    newton_iterations: int
    converged: bool
    loglik: float
    min_eigenvalue: float  # of info_matrix
    flag: Optional[str] = None  # diagnostic on non-convergence


def select_support(fit: DantzigFit) -> SelectedSupport:
    """Strict threshold rule: j is selected iff |beta_hat_j| > gamma.

    Refuses fits without a feasibility certificate.
    """
    if not fit.converged or fit.beta_hat is None:
        raise UnconvergedFitError(
            "support selection refused: the selector fit carries no feasibility "
            "certificate (converged=False)"
        )
    idx = np.flatnonzero(np.abs(fit.beta_hat) > fit.gamma)
    return SelectedSupport(tuple(int(j) for j in idx), fit.gamma, fit)


def _newton(ds, T, x0, ctrl):
    """Damped Newton on the restricted likelihood.

    Returns (x, iterations, converged, flag, last_eval).
    """
    p = ds.p
    x = x0.copy()
    beta_full = np.zeros(p)
    beta_full[T] = x
    try:
        ev = evaluate(ds, beta_full, order=1, restrict=T)
    except ScoreOverflowError:
        x = np.zeros(len(T))  # fall back to the origin
        beta_full[:] = 0.0
        ev = evaluate(ds, beta_full, order=1, restrict=T)

    flag = None
    converged = False
    it = 0
    # A small score alone is not a maximizer certificate: under a monotone
    # likelihood the score vanishes as beta runs off while the curvature
    # collapses even faster.  Demand a small Newton correction as well.
    step_tol = math.sqrt(ctrl.tol)
    while it < ctrl.max_iter:
        u = ev.score
        J = neg_hessian(ds, beta_full, restrict=T)
        try:
            d = np.linalg.solve(J, u)
        except np.linalg.LinAlgError:
            eig = float(np.linalg.eigvalsh(J).min())
            raise SingularInformationError(
                f"restricted information matrix is singular during refit "
                f"(minimum eigenvalue {eig:.3g})"
            )
        if np.max(np.abs(u)) <= ctrl.tol and np.max(np.abs(d)) <= step_tol:
            converged = True
            break
        it += 1
        s = 1.0
        accepted = None
        for _ in range(45):
            cand = x + s * d
            cand_full = np.zeros(p)
            cand_full[T] = cand
            try:
                ev_cand = evaluate(ds, cand_full, order=1, restrict=T)
            except ScoreOverflowError:
                s *= 0.5
                continue
            if ev_cand.loglik > ev.loglik:
                accepted = (cand, cand_full, ev_cand)
                break
            s *= 0.5
        if accepted is None:
            flag = (
                "no likelihood increase along the Newton direction with "
                f"score norm {np.max(np.abs(u)):.3g}; monotone likelihood suspected"
            )
            break
        gain = accepted[2].loglik - ev.loglik
        x, beta_full, ev = accepted
        if np.max(np.abs(x)) > ctrl.max_beta:
            flag = (
                f"coefficient magnitude {np.max(np.abs(x)):.3g} exceeded "
                f"max_beta={ctrl.max_beta}; monotone likelihood suspected"
            )
            break
        if gain < ctrl.min_loglik_increase and np.max(np.abs(ev.score)) > 10 * ctrl.tol:
            flag = (
                f"likelihood gain {gain:.3g} below threshold while the score "
                f"norm is {np.max(np.abs(ev.score)):.3g}; monotone likelihood suspected"
            )
            break
    else:
        flag = f"Newton did not converge in {ctrl.max_iter} iterations"
    if converged:
        flag = None
    return x, it, converged, flag, ev


def refit_mle(
    ds: SurvivalDataset,
    support: SelectedSupport,
    ctrl: NewtonControl = NewtonControl(),
    level: float = 0.95,
) -> RefitResult:
    """Restricted MLE on the selected support with Wald inference.

    The reported ``wald_intervals`` use ``level``; other levels can be had
    from :func:`wald_inference` without refitting.
    """
    T = list(support.indices)
    if any(not (0 <= j < ds.p) for j in T):
        raise ValueError(f"support indices out of range for p={ds.p}")
    if len(T) > ds.n_events:
        raise ValueError(
            f"support size {len(T)} exceeds the number of events "
            f"({ds.n_events}); the restricted likelihood is ill-posed"
        )

    if not T:
        zero = np.zeros(ds.p)
        ll = evaluate(ds, zero, order=1).loglik if ds.n_events else 0.0
        return RefitResult(
            support=support,
            beta2=zero,
            info_matrix=np.zeros((0, 0)),
            covariance=np.zeros((0, 0)),
            wald_intervals=(),
            newton_iterations=0,
            converged=True,
            loglik=ll,
            min_eigenvalue=np.nan,
        )

    if ctrl.start == "dantzig" and support.source_fit is not None and (
        support.source_fit.beta_hat is not None
    ):
        x0 = support.source_fit.beta_hat[T].astype(float)
    else:
        x0 = np.zeros(len(T))

    x, iters, converged, flag, ev = _newton(ds, T, x0, ctrl)
    beta2 = np.zeros(ds.p)
    beta2[T] = x
    info = neg_hessian(ds, beta2, restrict=T)
    info = (info + info.T) / 2.0

    if not converged:
        return RefitResult(
            support, beta2, info, None, (), iters, False, ev.loglik, np.nan, flag
        )

    min_eig = float(np.linalg.eigvalsh(info).min())
    if min_eig <= 0.0:
        raise SingularInformationError(
            f"information matrix at the refit is not positive definite "
            f"(minimum eigenvalue {min_eig:.6g})"
        )
    covariance = np.linalg.inv(info) / ds.n
    result = RefitResult(
        support, beta2, info, covariance, (), iters, True, ev.loglik, min_eig
    )
    intervals = wald_inference(result, level)
    return RefitResult(
        support, beta2, info, covariance, intervals, iters, True, ev.loglik, min_eig
    )


def wald_inference(res: RefitResult, level: float = 0.95) -> tuple:
    """Pointwise Wald intervals for the selected coordinates.

    Interval j is beta2_j +/- z_(1+level)/2 * sqrt(covariance_jj); a zero
    variance collapses it to the point estimate.
    """
    if not (0.0 < level < 1.0):
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if not res.converged or res.covariance is None:
        raise UnconvergedFitError("Wald inference requires a converged refit")
    if len(res.support) == 0:
        return ()
    if res.min_eigenvalue <= 0.0:
        raise SingularInformationError(
            f"information matrix not positive definite "
            f"(minimum eigenvalue {res.min_eigenvalue:.6g})"
        )
    z = normal_quantile((1.0 + level) / 2.0)
    out = []
    for k, j in enumerate(res.support.indices):
        half = z * float(np.sqrt(res.covariance[k, k]))
        out.append((res.beta2[j] - half, res.beta2[j] + half))
    return tuple(out)
