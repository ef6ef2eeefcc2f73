"""Risk-set statistics and the log partial likelihood with its derivatives.

All integrals against the counting measure reduce to finite sums over the
observed event times, so every quantity here is exact up to floating
point.  For constant covariates one descending-time sweep updates the
risk-set sums incrementally, giving O(n p) per score evaluation and
O(n p^2) per Hessian; step covariate paths fall back to per-event
recomputation.

Exponents are centered by their maximum before exponentiating, which
keeps every weight in (0, 1] and leaves all ratios unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import SurvivalDataset
from .exceptions import NoEventsError, ScoreOverflowError

__all__ = [
    "RiskSetStats",
    "ScoreHessian",
    "risk_stats",
    "log_partial_likelihood",
    "score",
    "neg_hessian",
    "neg_hessian_matvec",
    "neg_hessian_columns",
    "score_process",
    "evaluate",
]

#: Exponents beyond this signal a diverging optimizer, not valid data.
ETA_BOUND = 700.0


@dataclass(frozen=True)
class RiskSetStats:
    """Weighted risk-set sums S(0), S(1) and optionally S(2) at one time."""

    s0: float
    s1: Optional[np.ndarray]
    s2: Optional[np.ndarray]

    @property
    def empty(self) -> bool:
        return self.s0 == 0.0


@dataclass(frozen=True)
class ScoreHessian:
    """Log partial likelihood with its gradient and negated Hessian."""

    loglik: float
    score: np.ndarray
    neg_hessian: Optional[np.ndarray]


def _check_beta(ds: SurvivalDataset, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (ds.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({ds.p},)")
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta contains non-finite entries")
    return beta


def _checked_eta(Z: np.ndarray, beta: np.ndarray) -> np.ndarray:
    eta = Z @ beta
    if eta.size and np.max(np.abs(eta)) > ETA_BOUND:
        raise ScoreOverflowError(
            f"linear predictor magnitude {np.max(np.abs(eta)):.3g} exceeds "
            f"{ETA_BOUND}; the optimizer appears to be diverging"
        )
    return eta


def risk_stats(
    ds: SurvivalDataset,
    beta,
    t: float,
    order: int = 1,
    restrict: Optional[Sequence[int]] = None,
) -> RiskSetStats:
    """Exact risk-set sums at time ``t``.

    ``order`` selects how many moments to return (0, 1 or 2); ``restrict``
    limits the covariate coordinates entering s1/s2 while the weights
    always use the full ``beta``.  An empty risk set is reported as
    s0 = 0, not an error.
    """
    beta = _check_beta(ds, beta)
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    at_risk = ds.times >= t
    p_out = ds.p if restrict is None else len(restrict)
    if not at_risk.any():
        return RiskSetStats(
            0.0,
            np.zeros(p_out) if order >= 1 else None,
            np.zeros((p_out, p_out)) if order == 2 else None,
        )
    Z = ds.covariates_at(t)[at_risk]
    eta = _checked_eta(Z, beta)
    c = eta.max()
    w = np.exp(eta - c)
    scale = np.exp(c)
    if restrict is not None:
        Z = Z[:, list(restrict)]
    s0 = float(w.sum() * scale)
    s1 = (w @ Z) * scale if order >= 1 else None
    s2 = ((w[:, None] * Z).T @ Z) * scale if order == 2 else None
    return RiskSetStats(s0, s1, s2)


def _sweep_constant(
    ds: SurvivalDataset,
    beta: np.ndarray,
    order: int,
    restrict: Optional[Sequence[int]],
    t_max: float,
):
    """One pass over event times (descending) for constant covariates.

    Returns (loglik, score, neg_hessian) with entries None above ``order``.
    Events with time > t_max contribute only their risk-set membership.
    """
    Z = ds.constant_covariates
    eta = _checked_eta(Z, beta)
    c = eta.max() if eta.size else 0.0
    w = np.exp(eta - c)
    cols = slice(None) if restrict is None else list(restrict)
    Zr = Z[:, cols]
    p_out = Zr.shape[1]

    ev = [(t, i) for t, i in zip(ds._event_time_values, ds._event_order)]
    desc = np.argsort(ds.times, kind="stable")[::-1]

    loglik = 0.0
    u = np.zeros(p_out)
    H = np.zeros((p_out, p_out)) if order == 2 else None

    ptr = 0
    s0w = 0.0
    s1w = np.zeros(p_out)
    s2w = np.zeros((p_out, p_out)) if order == 2 else None
    for t, i in reversed(ev):
        start = ptr
        while ptr < ds.n and ds.times[desc[ptr]] >= t:
            ptr += 1
        if ptr > start:
            batch = desc[start:ptr]
            wb = w[batch]
            Zb = Zr[batch]
            s0w += float(wb.sum())
            s1w += wb @ Zb
            if s2w is not None:
                s2w += (wb[:, None] * Zb).T @ Zb
        if t > t_max:
            continue
        loglik += float(eta[i]) - (c + np.log(s0w))
        mean = s1w / s0w
        u += Zr[i] - mean
        if H is not None:
            H += s2w / s0w - np.outer(mean, mean)
    n = ds.n
    return loglik / n, u / n, (H / n if H is not None else None)


def _sweep_general(
    ds: SurvivalDataset,
    beta: np.ndarray,
    order: int,
    restrict: Optional[Sequence[int]],
    t_max: float,
):
    """Per-event recomputation for step covariate paths."""
    loglik = 0.0
    p_out = ds.p if restrict is None else len(restrict)
    u = np.zeros(p_out)
    H = np.zeros((p_out, p_out)) if order == 2 else None
    cols = slice(None) if restrict is None else list(restrict)
    for t, i in zip(ds._event_time_values, ds._event_order):
        if t > t_max:
            break
        Zt = ds.covariates_at(t)
        stats = risk_stats(ds, beta, t, order=max(order, 1), restrict=restrict)
        loglik += float(Zt[i] @ beta) - np.log(stats.s0)
        mean = stats.s1 / stats.s0
        u += Zt[i, cols] - mean
        if H is not None:
            H += stats.s2 / stats.s0 - np.outer(mean, mean)
    n = ds.n
    return loglik / n, u / n, (H / n if H is not None else None)


def evaluate(
    ds: SurvivalDataset,
    beta,
    order: int = 2,
    restrict: Optional[Sequence[int]] = None,
    t_max: float = 1.0,
) -> ScoreHessian:
    """Log partial likelihood, score and (for order 2) negated Hessian.

    One shared sweep; ``restrict`` narrows the score/Hessian coordinates
    while weights keep the full linear predictor.
    """
    beta = _check_beta(ds, beta)
    if ds.n_events == 0:
        raise NoEventsError("partial likelihood undefined: dataset has no events")
    sweep = _sweep_constant if ds.all_constant else _sweep_general
    ll, u, H = sweep(ds, beta, order, restrict, t_max)
    return ScoreHessian(ll, u, H)


def log_partial_likelihood(ds: SurvivalDataset, beta) -> float:
    """l_n(beta): the event-averaged log partial likelihood."""
    return evaluate(ds, beta, order=1).loglik


def score(ds: SurvivalDataset, beta, restrict: Optional[Sequence[int]] = None) -> np.ndarray:
    """U_n(beta), the gradient of l_n; restricted coordinates on request."""
    return evaluate(ds, beta, order=1, restrict=restrict).score


def neg_hessian(
    ds: SurvivalDataset, beta, restrict: Optional[Sequence[int]] = None
) -> np.ndarray:
    """J_n(beta), the negated Hessian of l_n (positive semidefinite)."""
    return evaluate(ds, beta, order=2, restrict=restrict).neg_hessian


def score_process(ds: SurvivalDataset, beta, t: float) -> np.ndarray:
    """Partial-sum score over event times up to ``t``; equals score at t=1."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"time {t} outside [0, 1]")
    return evaluate(ds, beta, order=1, t_max=t).score


def neg_hessian_matvec(ds: SurvivalDataset, beta, v) -> np.ndarray:
    """J_n(beta) @ v without forming J_n; O(n p) for constant covariates."""
    beta = _check_beta(ds, beta)
    v = np.asarray(v, dtype=float)
    if v.shape != (ds.p,):
        raise ValueError(f"v has shape {v.shape}, expected ({ds.p},)")
    if not ds.all_constant:
        return neg_hessian(ds, beta) @ v

    Z = ds.constant_covariates
    eta = _checked_eta(Z, beta)
    w = np.exp(eta - eta.max())
    zv = Z @ v
    desc = np.argsort(ds.times, kind="stable")[::-1]
    ev = list(zip(ds._event_time_values, ds._event_order))

    out = np.zeros(ds.p)
    ptr = 0
    s0w = 0.0
    s1w = np.zeros(ds.p)
    s2v = np.zeros(ds.p)  # sum of w_i Z_i (Z_i . v)
    for t, _ in reversed(ev):
        start = ptr
        while ptr < ds.n and ds.times[desc[ptr]] >= t:
            ptr += 1
        if ptr > start:
            batch = desc[start:ptr]
            wb = w[batch]
            s0w += float(wb.sum())
            s1w += wb @ Z[batch]
            s2v += (wb * zv[batch]) @ Z[batch]
        out += s2v / s0w - s1w * (s1w @ v) / (s0w * s0w)
    return out / ds.n


def neg_hessian_columns(ds: SurvivalDataset, beta, cols: Sequence[int]) -> np.ndarray:
    """The (p, |cols|) column block of J_n(beta); O(n p |cols|) when constant."""
    beta = _check_beta(ds, beta)
    cols = list(cols)
    if not ds.all_constant:
        return neg_hessian(ds, beta)[:, cols]

    Z = ds.constant_covariates
    eta = _checked_eta(Z, beta)
    w = np.exp(eta - eta.max())
    desc = np.argsort(ds.times, kind="stable")[::-1]
    ev = list(zip(ds._event_time_values, ds._event_order))

    out = np.zeros((ds.p, len(cols)))
    ptr = 0
    s0w = 0.0
    s1w = np.zeros(ds.p)
    s2w = np.zeros((ds.p, len(cols)))
    for t, _ in reversed(ev):
        start = ptr
        while ptr < ds.n and ds.times[desc[ptr]] >= t:
            ptr += 1
        if ptr > start:
            batch = desc[start:ptr]
            wb = w[batch]
            Zb = Z[batch]
            s0w += float(wb.sum())
            s1w += wb @ Zb
            s2w += Zb.T @ (wb[:, None] * Zb[:, cols])
        out += s2w / s0w - np.outer(s1w, s1w[cols]) / (s0w * s0w)
    return out / ds.n
