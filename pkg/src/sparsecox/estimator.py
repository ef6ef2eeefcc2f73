"""Estimator front end with the scikit-learn fit/predict calling shape.

``DantzigCox`` chains the full pipeline: selector fit, threshold support
selection, restricted maximum-likelihood refit with Wald intervals, and
the baseline cumulative-hazard estimate.  Inputs are plain arrays; times
on any positive axis are mapped into the unit window and the scale is
kept so hazard queries accept original-axis times.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .dantzig import SolverControl, TuningSchedule, fit_dantzig
from .dataset import SurvivalDataset
from .hazard import breslow_estimate
from .partial_likelihood import log_partial_likelihood
from .refit import NewtonControl, SelectedSupport, refit_mle, select_support

__all__ = ["DantzigCox"]


def _split_outcome(y) -> tuple:
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[1] != 2:
        raise ValueError(
            "y must be an (n, 2) array with columns (time, event indicator)"
        )
    times = y[:, 0]
    raw = y[:, 1]
    if not np.all((raw == 0.0) | (raw == 1.0)):
        raise ValueError("event indicators must be 0 or 1")
    return times, raw.astype(bool)


class DantzigCox(BaseEstimator):
    """Sparse proportional-hazards estimation with post-selection inference.

    Parameters
    ----------
    gamma : float, optional
        Explicit tuning level; when None the rate schedule
        c_gamma * n**(-alpha) * log(p) applies.
    alpha, zeta, c_gamma : float
        Rate-schedule parameters (0 < zeta < alpha <= 1/2).
    level : float
        Confidence level for the Wald intervals.
    standardize : bool
        Scale covariate columns to unit standard deviation for the
        selector only.  Support selection happens on the standardized
        scale; the refit, intervals, and hazard are computed on the
        original scale, and the selector coefficients are mapped back.
    normalize_time : bool
        Divide times by the largest observed time (recorded as
        ``time_scale_``).  When False, times must already lie in (0, 1].
    solver : SolverControl, optional
    newton : NewtonControl, optional

    Attributes
    ----------
    gamma_ : float
        Tuning level used by the selector.
    dantzig_coef_ : ndarray of shape (p,)
        Selector estimate (original covariate scale).
    coef_ : ndarray of shape (p,)
        Post-selection refit estimate; zero off the selected support.
    support_ : ndarray of int
        Indices with |selector coefficient| strictly above gamma, on the
        selection scale.
    covariance_ : ndarray of shape (s, s) or None
        Wald covariance of the selected coordinates.
    confidence_intervals_ : ndarray of shape (s, 2)
        Pointwise Wald intervals for the selected coordinates.
    baseline_hazard_ : HazardEstimate or None
        Breslow estimate at ``coef_`` (unit time axis).
    converged_ : bool
        True when both the selector and the refit carry certificates.
    """

    def __init__(
        self,
        gamma: Optional[float] = None,
        alpha: float = 0.5,
        zeta: float = 0.25,
        c_gamma: float = 0.5,
        level: float = 0.95,
        standardize: bool = False,
        normalize_time: bool = True,
        solver: Optional[SolverControl] = None,
        newton: Optional[NewtonControl] = None,
    ) -> None:
        self.gamma = gamma
        self.alpha = alpha
        self.zeta = zeta
        self.c_gamma = c_gamma
        self.level = level
        self.standardize = standardize
        self.normalize_time = normalize_time
        self.solver = solver
        self.newton = newton

    def fit(self, X, y) -> "DantzigCox":
        X = check_array(X, dtype=float)
        times, events = _split_outcome(y)
        if times.shape[0] != X.shape[0]:
            raise ValueError(
                f"X has {X.shape[0]} rows but y has {times.shape[0]}"
            )

        if self.normalize_time:
            scale = float(times.max())
            if scale <= 0.0:
                raise ValueError("times must be positive")
            unit_times = times / scale
        else:
            scale = 1.0
            unit_times = times

        if self.standardize:
            sigma = X.std(axis=0)
            sigma = np.where(sigma > 0.0, sigma, 1.0)
        else:
            sigma = np.ones(X.shape[1])

        ds_select = SurvivalDataset.from_arrays(
            unit_times, events, X / sigma, time_scale=scale
        )
        schedule = TuningSchedule(
            alpha=self.alpha,
            zeta=self.zeta,
            c_gamma=self.c_gamma,
            explicit_gamma=self.gamma,
        )
        solver = self.solver if self.solver is not None else SolverControl()
        newton = self.newton if self.newton is not None else NewtonControl()

        fit = fit_dantzig(ds_select, schedule, solver)
        sel = select_support(fit)

        if self.standardize:
            ds_refit = SurvivalDataset.from_arrays(
                unit_times, events, X, time_scale=scale
            )
            # The selector warm start lives on the standardized scale, so
            # the refit restarts from zero on the original scale.
            support = SelectedSupport(sel.indices, sel.threshold)
        else:
            ds_refit = ds_select
            support = sel
        res = refit_mle(ds_refit, support, newton, self.level)

        self.n_features_in_ = X.shape[1]
        self.time_scale_ = scale
        self.gamma_ = fit.gamma
        self.dantzig_coef_ = fit.beta_hat / sigma
        self.support_ = np.array(sel.indices, dtype=int)
        self.coef_ = res.beta2
        self.covariance_ = res.covariance
        self.confidence_intervals_ = np.array(
            res.wald_intervals, dtype=float
        ).reshape(len(sel.indices) if res.converged else 0, 2)
        self.result_ = res
        self.selector_fit_ = fit
        self.converged_ = bool(fit.converged and res.converged)
        self.baseline_hazard_ = (
            breslow_estimate(ds_refit, res) if res.converged else None
        )
        return self

    def predict(self, X) -> np.ndarray:
        """Linear risk score X @ coef_ (higher means earlier events)."""
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return X @ self.coef_

    def predict_cumulative_hazard(self, X, times) -> np.ndarray:
        """Cumulative hazard Lambda(t | Z) on the original time axis.

        Returns an (n_samples, n_times) array; requires a converged fit.
        """
        check_is_fitted(self, "coef_")
        if self.baseline_hazard_ is None:
            raise ValueError(
                "no baseline hazard available: the fit did not converge"
            )
        risk = np.exp(self.predict(X))
        times = np.asarray(times, dtype=float)
        base = np.array(
            [
                self.baseline_hazard_.cumulative_at(t / self.time_scale_)
                for t in np.atleast_1d(times)
            ]
        )
        return np.outer(risk, base)

    def score(self, X, y) -> float:
        """Log partial likelihood of the fitted coefficients on (X, y)."""
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        times, events = _split_outcome(y)
        unit = times / self.time_scale_ if self.normalize_time else times
        ds = SurvivalDataset.from_arrays(unit, events, X)
        return log_partial_likelihood(ds, self.coef_)
