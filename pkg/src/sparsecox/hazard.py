"""Cumulative baseline hazard estimation with pointwise variance.

The estimator jumps by 1/S_n(0)(beta, t_e) at each event time; with zero
coefficients every weight is one and the estimator reduces bit for bit to
the classical occurrence/exposure (Nelson-Aalen) estimator, which is also
implemented here independently as a cross-check.

Two variance scales are carried per jump: the martingale plug-in

    var(t) = n * sum_{t_e <= t} 1 / S_n(0)(beta, t_e)^2,

estimating the variance function of the centered hazard process on the
sqrt(n) scale, and a total variance adding the drift contribution
H(t)' I^{-1} H(t) from the estimated coefficients, where H is the running
drift vector and I the restricted information.  The two limit pieces are
asymptotically independent, so the sum needs no cross term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import SurvivalDataset, event_times
from .exceptions import UnconvergedFitError
from .partial_likelihood import risk_stats
from .refit import RefitResult
from .stats import normal_quantile

__all__ = [
    "HazardEstimate",
    "breslow_estimate",
    "breslow_at",
    "nelson_aalen",
    "variance_function",
    "drift_vector",
    "hazard_confidence_band",
]


@dataclass(frozen=True)
class HazardEstimate:
    """Step-function hazard estimate on [0, last_followup].

    ``variance`` and ``var_total`` are running sums on the sqrt(n) scale;
    pointwise confidence intervals divide them by n.  ``h_vectors`` holds
    the running drift vector (one row per jump, columns = support).
    """

    jump_times: np.ndarray
    jumps: np.ndarray
    cumulative: np.ndarray
    variance: np.ndarray
    var_total: np.ndarray
    h_vectors: np.ndarray  # (k, |support|)
    support: tuple
    n: int
    last_followup: float

    def _index(self, t: float) -> int:
        if not (0.0 <= t <= 1.0):
            raise ValueError(f"time {t} outside [0, 1]")
        return int(np.searchsorted(self.jump_times, t, side="right"))

    def cumulative_at(self, t: float) -> float:
        """Step evaluation of the cumulative hazard (right-continuous)."""
        i = self._index(t)
        return float(self.cumulative[i - 1]) if i else 0.0

    def variance_at(self, t: float, total: bool = False) -> float:
        i = self._index(t)
        if i == 0:
            return 0.0
        arr = self.var_total if total else self.variance
        return float(arr[i - 1])

    def drift_at(self, t: float) -> np.ndarray:
        i = self._index(t)
        if i == 0:
            return np.zeros(len(self.support))
        return self.h_vectors[i - 1].copy()


def breslow_at(
    ds: SurvivalDataset,
    beta,
    support: Sequence[int] = (),
    inv_info: Optional[np.ndarray] = None,
) -> HazardEstimate:
    """Hazard estimate at an explicit coefficient vector.

    ``support`` selects the coordinates entering the drift vector;
    ``inv_info`` (the |support| x |support| inverse information) enables
    the total-variance column, which otherwise equals the martingale one.
    """
    beta = np.asarray(beta, dtype=float)
    support = tuple(int(j) for j in support)
    ev = event_times(ds)
    k = len(ev)
    S = len(support)

    jump_times = np.array([t for t, _ in ev])
    jumps = np.empty(k)
    var_steps = np.empty(k)
    h_steps = np.empty((k, S))
    for r, (t, _) in enumerate(ev):
        st = risk_stats(ds, beta, t, order=1 if S else 0, restrict=support or None)
        assert st.s0 > 0.0, "event subject must be at risk at its own event time"
        jumps[r] = 1.0 / st.s0
        var_steps[r] = ds.n / (st.s0 * st.s0)
        if S:
            h_steps[r] = -st.s1 / (st.s0 * st.s0)

    cumulative = np.cumsum(jumps) if k else np.empty(0)
    variance = np.cumsum(var_steps) if k else np.empty(0)
    h_vectors = np.cumsum(h_steps, axis=0) if k else np.empty((0, S))
    if S and inv_info is not None:
        drift_var = np.einsum("ki,ij,kj->k", h_vectors, inv_info, h_vectors)
        var_total = variance + drift_var
    else:
        var_total = variance.copy()
    return HazardEstimate(
        jump_times=jump_times,
        jumps=jumps,
        cumulative=cumulative,
        variance=variance,
        var_total=var_total,
        h_vectors=h_vectors,
        support=support,
        n=ds.n,
        last_followup=float(ds.times.max()),
    )


def breslow_estimate(ds: SurvivalDataset, res: RefitResult) -> HazardEstimate:
    """Hazard estimate at the refit coefficients.

    Requires a converged refit; the drift and total variance use the
    refit's support and information matrix.
    """
    if not res.converged:
        raise UnconvergedFitError(
            "hazard estimation requires a converged refit"
        )
    inv_info = None
    if res.covariance is not None and len(res.support) > 0:
        inv_info = res.covariance * ds.n  # covariance = inv(info)/n
    return breslow_at(ds, res.beta2, res.support.indices, inv_info)


def nelson_aalen(ds: SurvivalDataset) -> HazardEstimate:
    """Occurrence/exposure estimator: jump 1/#at-risk per event time.

    Written against raw counts, independent of the weighted risk-set
    machinery, so it can serve as an exact cross-check of the zero-beta
    reduction.
    """
    ev = event_times(ds)
    times = ds.times
    jump_times = np.array([t for t, _ in ev])
    at_risk = np.array([float(np.sum(times >= t)) for t, _ in ev])
    jumps = 1.0 / at_risk if len(ev) else np.empty(0)
    variance = (
        np.cumsum(ds.n / (at_risk * at_risk)) if len(ev) else np.empty(0)
    )
    return HazardEstimate(
        jump_times=jump_times,
        jumps=jumps,
        cumulative=np.cumsum(jumps) if len(ev) else np.empty(0),
        variance=variance,
        var_total=variance.copy(),
        h_vectors=np.empty((len(ev), 0)),
        support=(),
        n=ds.n,
        last_followup=float(times.max()),
    )


def variance_function(est: HazardEstimate, t: float, total: bool = False) -> float:
    """Plug-in variance of the sqrt(n)-scaled hazard error up to ``t``."""
    return est.variance_at(t, total=total)


def drift_vector(ds: SurvivalDataset, res: RefitResult, t: float) -> np.ndarray:
    """Running drift H(t) = -sum_{t_e <= t} S(1)_support / S(0)^2 at the refit."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"time {t} outside [0, 1]")
    T = list(res.support.indices)
    out = np.zeros(len(T))
    for te, _ in event_times(ds):
        if te > t:
            break
        st = risk_stats(ds, res.beta2, te, order=1, restrict=T)
        out -= st.s1 / (st.s0 * st.s0)
    return out


def hazard_confidence_band(
    est: HazardEstimate, level: float = 0.95, total: bool = False
) -> tuple:
    """Pointwise intervals (time, lo, hi) at the jump times, floored at 0."""
    if not (0.0 < level < 1.0):
        raise ValueError(f"level must lie in (0, 1), got {level}")
    z = normal_quantile((1.0 + level) / 2.0)
    var = est.var_total if total else est.variance
    half = z * np.sqrt(var / est.n)
    lo = np.maximum(est.cumulative - half, 0.0)
    hi = est.cumulative + half
    return tuple(
        (float(t), float(a), float(b))
        for t, a, b in zip(est.jump_times, lo, hi)
    )
