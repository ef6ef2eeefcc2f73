"""Synthetic data generation and Monte Carlo verification studies.

The generator draws from the proportional-hazards model with a known
coefficient vector and baseline: covariates are bounded i.i.d. draws, the
event time is the inverse cumulative baseline evaluated at an exponential
variate scaled by the relative risk, and observation stops at the earlier
of the event, the censoring draw, and the end of follow-up at time 1.

A study runs the full pipeline (selector, threshold selection, refit,
hazard estimate) on independent replicates and aggregates the quantities
the asymptotic theory speaks about: exact-selection rate, l1 estimation
error, conditional coverage and standardized-coordinate normality, hazard
coverage, and the correlation between coefficient deviations and the
drift-corrected hazard statistic.  Replicate seeds derive from the master
seed and the (grid point, replicate) counters, so reports are bit
identical whatever the worker count; workers are separate processes with
their numerical libraries pinned to one thread each.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Optional, Sequence

import numpy as np

from .dantzig import SolverControl, TuningSchedule, fit_dantzig
from .dataset import SurvivalDataset
from .exceptions import SparseCoxError
from .hazard import breslow_estimate
from .partial_likelihood import neg_hessian
from .refit import NewtonControl, refit_mle, select_support
from .stats import ks_distance_normal, normal_quantile

__all__ = [
    "GeneratorConfig",
    "TruthRecord",
    "EstimatorSettings",
    "McReport",
    "generate",
    "run_mc_study",
    "population_info",
]

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

#: Fewer observed events than this marks a draw as degenerate.
MIN_EVENTS = 5

#: Study-level failure budget: abort when more than this share of
#: replicates raises.
FAILURE_BUDGET = 0.2


@dataclass(frozen=True)
class GeneratorConfig:
    """Data-generating law: coefficients, baseline, censoring, covariates.

    ``beta0_values`` lists the nonzero coefficients, one per support
    index; an empty tuple gives the global null.  ``support`` defaults to
    the first ``len(beta0_values)`` coordinates.  The covariate laws are
    bounded by one so the design satisfies the boundedness assumption by
    construction; ``ar_rho`` optionally applies a clipped AR(1) filter
    across coordinates, a stress option outside the verified assumptions.
    """

    n: int
    p: int
    beta0_values: tuple = ()
    support: Optional[tuple] = None
    signal_floor: float = 0.05
    baseline: str = "constant"
    baseline_rate: float = 1.0
    weibull_shape: float = 2.0
    weibull_scale: float = 1.0
    censoring: str = "administrative"
    censor_max: float = 1.0
    covariate_law: str = "uniform"
    ar_rho: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        values = tuple(float(v) for v in self.beta0_values)
        support = self.support
        if support is None:
            support = tuple(range(len(values)))
        support = tuple(int(j) for j in support)
        if len(support) != len(values):
            raise ValueError(
                f"{len(values)} coefficient values for {len(support)} "
                f"support indices"
            )
        if len(set(support)) != len(support):
            raise ValueError("support indices must be distinct")
        if support and (min(support) < 0 or max(support) >= self.p):
            raise ValueError(f"support indices out of range for p={self.p}")
        if len(support) > self.p:
            raise ValueError("sparsity exceeds p")
        if not self.signal_floor > 0.0:
            raise ValueError("signal_floor must be positive")
        if any(abs(v) < self.signal_floor for v in values):
            raise ValueError(
                f"all signal coefficients need magnitude >= signal_floor="
                f"{self.signal_floor}"
            )
        if self.baseline not in ("constant", "weibull"):
            raise ValueError(f"unknown baseline {self.baseline!r}")
        if self.baseline == "constant" and not self.baseline_rate > 0.0:
            raise ValueError("baseline_rate must be positive")
        if self.baseline == "weibull" and (
            not self.weibull_shape > 0.0 or not self.weibull_scale > 0.0
        ):
            raise ValueError("weibull shape and scale must be positive")
        if self.censoring not in ("administrative", "uniform"):
            raise ValueError(f"unknown censoring {self.censoring!r}")
        if self.censoring == "uniform" and not self.censor_max > 0.0:
            raise ValueError("censor_max must be positive")
        if self.covariate_law not in ("uniform", "rademacher"):
            raise ValueError(f"unknown covariate_law {self.covariate_law!r}")
        if not -1.0 < self.ar_rho < 1.0:
            raise ValueError("ar_rho must lie in (-1, 1)")
        object.__setattr__(self, "beta0_values", values)
        object.__setattr__(self, "support", support)

    @property
    def sparsity(self) -> int:
        return len(self.support)

    def beta0(self) -> np.ndarray:
        """The full p-dimensional coefficient vector."""
        beta = np.zeros(self.p)
        for j, v in zip(self.support, self.beta0_values):
            beta[j] = v
        return beta

    def cumulative_baseline(self, t: float) -> float:
        """True cumulative baseline hazard at ``t``."""
        if self.baseline == "constant":
            return self.baseline_rate * float(t)
        return (float(t) / self.weibull_scale) ** self.weibull_shape

    def _inverse_baseline(self, u: np.ndarray) -> np.ndarray:
        if self.baseline == "constant":
            return u / self.baseline_rate
        return self.weibull_scale * u ** (1.0 / self.weibull_shape)


@dataclass(frozen=True)
class TruthRecord:
    """Hidden generator state kept alongside a simulated dataset."""

    config: GeneratorConfig
    beta0: np.ndarray
    support: tuple
    latent_event_times: np.ndarray
    censor_times: np.ndarray
    degenerate: bool

    def cumulative_baseline(self, t: float) -> float:
        return self.config.cumulative_baseline(t)


def generate(
    cfg: GeneratorConfig, rng: Optional[np.random.Generator] = None
) -> tuple:
    """Draw one dataset from ``cfg``; returns (dataset, truth record).

    The draw order is fixed (covariates, exponential variates, censoring)
    so a given generator state always yields the same data.  Observed
    times are clamped into (0, 1]; a draw with fewer than ``MIN_EVENTS``
    events is flagged degenerate and triggers a warning.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n, p = cfg.n, cfg.p

    if cfg.covariate_law == "uniform":
        z = rng.uniform(-1.0, 1.0, size=(n, p))
    else:
        z = rng.choice(np.array([-1.0, 1.0]), size=(n, p))
    if cfg.ar_rho != 0.0:
        rho = cfg.ar_rho
        out = z.copy()
        for j in range(1, p):
            out[:, j] = rho * out[:, j - 1] + math.sqrt(1.0 - rho * rho) * z[:, j]
        z = np.clip(out, -1.0, 1.0)

    beta0 = cfg.beta0()
    eta = z @ beta0
    e = rng.exponential(size=n)
    t_latent = cfg._inverse_baseline(e * np.exp(-eta))

    if cfg.censoring == "uniform":
        censor = np.minimum(rng.uniform(0.0, cfg.censor_max, size=n), 1.0)
    else:
        censor = np.ones(n)

    x = np.minimum(t_latent, censor)
    events = t_latent <= censor
    x = np.clip(x, 1e-12, 1.0)

    degenerate = int(events.sum()) < MIN_EVENTS
    if degenerate:
        warnings.warn(
            f"degenerate draw: only {int(events.sum())} events "
            f"(need {MIN_EVENTS}); check the censoring configuration",
            RuntimeWarning,
            stacklevel=2,
        )
    ds = SurvivalDataset.from_arrays(x, events, z)
    truth = TruthRecord(
        config=cfg,
        beta0=beta0,
        support=cfg.support,
        latent_event_times=t_latent,
        censor_times=censor,
        degenerate=degenerate,
    )
    return ds, truth


def population_info(
    cfg: GeneratorConfig, beta, r_inner: int = 200
) -> np.ndarray:
    """Monte Carlo approximation of the population information at ``beta``.

    Averages the observed information over ``r_inner`` fresh datasets
    drawn on a dedicated seed lane (tag 7) so it never collides with study
    replicate streams.
    """
    if r_inner < 1:
        raise ValueError("r_inner must be positive")
    beta = np.asarray(beta, dtype=float)
    total = np.zeros((cfg.p, cfg.p))
    for k in range(r_inner):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 7, k)))
        ds, _ = generate(cfg, rng=rng)
        total += neg_hessian(ds, beta)
    avg = total / r_inner
    return (avg + avg.T) / 2.0


@dataclass(frozen=True)
class EstimatorSettings:
    """Pipeline settings shared by every replicate of a study."""

    schedule: TuningSchedule = field(default_factory=TuningSchedule)
    solver: SolverControl = field(default_factory=SolverControl)
    newton: NewtonControl = field(default_factory=NewtonControl)
    level: float = 0.95
    probe_times: tuple = (0.25, 0.5, 0.75)

    def __post_init__(self) -> None:
        if not (0.0 < self.level < 1.0):
            raise ValueError("level must lie in (0, 1)")
        probes = tuple(float(t) for t in self.probe_times)
        if any(not (0.0 < t <= 1.0) for t in probes):
            raise ValueError("probe times must lie in (0, 1]")
        object.__setattr__(self, "probe_times", probes)


@dataclass(frozen=True)
class McReport:
    """Aggregated study outcome for one grid point.

    ``coverage`` and ``normality`` are conditional on the event that the
    selected support equals the truth and the refit converged
    (``n_conditioned`` replicates); keys are stringified coordinate
    indices.  ``hazard_coverage`` and ``independence_check`` are keyed by
    probe time, the latter mapping each support coordinate to the
    empirical correlation between its sqrt(n)-scaled deviation and the
    drift-corrected hazard statistic.
    """

    config: GeneratorConfig
    replicates: int
    failures: int
    failure_reasons: tuple
    selection_exact_rate: float
    n_conditioned: int
    l1_errors: dict
    coverage: dict
    normality: dict
    hazard_coverage: dict
    independence_check: dict

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        rates = [self.selection_exact_rate] + list(self.coverage.values())
        rates += list(self.hazard_coverage.values())
        for r in rates:
            if not (math.isnan(r) or 0.0 <= r <= 1.0):
                raise ValueError(f"rate {r} outside [0, 1]")

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "config": {
                "n": cfg.n,
                "p": cfg.p,
                "beta0_values": list(cfg.beta0_values),
                "support": list(cfg.support),
                "baseline": cfg.baseline,
                "baseline_rate": cfg.baseline_rate,
                "weibull_shape": cfg.weibull_shape,
                "weibull_scale": cfg.weibull_scale,
                "censoring": cfg.censoring,
                "censor_max": cfg.censor_max,
                "covariate_law": cfg.covariate_law,
                "ar_rho": cfg.ar_rho,
            },
            "replicates": self.replicates,
            "failures": self.failures,
            "failure_reasons": list(self.failure_reasons),
            "selection_exact_rate": self.selection_exact_rate,
            "n_conditioned": self.n_conditioned,
            "l1_errors": self.l1_errors,
            "coverage": self.coverage,
            "normality": self.normality,
            "hazard_coverage": self.hazard_coverage,
            "independence_check": self.independence_check,
        }


def _replicate(task: tuple) -> dict:
    """Run the full pipeline once; returns a plain record dict.

    Executed in worker processes, so everything in and out is picklable.
    """
    master_seed, grid_index, rep_index, cfg, settings = task
    rng = np.random.default_rng(
        np.random.SeedSequence((master_seed, grid_index, rep_index))
    )
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            ds, truth = generate(cfg, rng=rng)
        fit = fit_dantzig(ds, settings.schedule, settings.solver)
        sel = select_support(fit)
        rec = {
            "selected": sel.indices,
            "selection_exact": sel.indices == truth.support,
            "l1_dantzig": float(
                np.abs(fit.beta_hat - truth.beta0).sum()
            ),
            "refit_converged": False,
        }
        res = refit_mle(ds, sel, settings.newton, settings.level)
        if not res.converged:
            return rec
        rec["refit_converged"] = True
        rec["l1_refit"] = float(np.abs(res.beta2 - truth.beta0).sum())
        if not rec["selection_exact"]:
            return rec

        # Conditional block: exact selection with a converged refit.
        est = breslow_estimate(ds, res)
        z_crit = normal_quantile((1.0 + settings.level) / 2.0)
        support = list(truth.support)
        b0 = truth.beta0[support]
        dev = math.sqrt(ds.n) * (res.beta2[support] - b0)
        covered = [
            bool(lo <= b <= hi)
            for (lo, hi), b in zip(res.wald_intervals, b0)
        ]
        standardized = [
            float((res.beta2[j] - b) / math.sqrt(res.covariance[k, k]))
            for k, (j, b) in enumerate(zip(support, b0))
        ]
        hazard = {}
        for t in settings.probe_times:
            lam_hat = est.cumulative_at(t)
            lam_true = truth.cumulative_baseline(t)
            half = z_crit * math.sqrt(est.variance_at(t, total=True) / ds.n)
            lo = max(lam_hat - half, 0.0)
            w_stat = math.sqrt(ds.n) * (lam_hat - lam_true) - float(
                est.drift_at(t) @ dev
            )
            hazard[t] = {
                "covered": bool(lo <= lam_true <= lam_hat + half),
                "w_stat": w_stat,
            }
        rec["dev"] = list(map(float, dev))
        rec["covered"] = covered
        rec["standardized"] = standardized
        rec["hazard"] = hazard
        return rec
    except (SparseCoxError, np.linalg.LinAlgError) as exc:
        return {"failure": f"{type(exc).__name__}: {exc}"}


def _summary(values: Sequence[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return {"count": 0, "mean": math.nan, "median": math.nan, "max": math.nan}
    return {
        "count": int(arr.size),
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
        "max": float(arr.max()),
    }


def _correlation(a: np.ndarray, b: np.ndarray) -> float:
    if a.size < 2:
        return math.nan
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        return math.nan
    return float(np.corrcoef(a, b)[0, 1])


def _aggregate(cfg: GeneratorConfig, settings, records: list) -> McReport:
    r = len(records)
    failures = [rec["failure"] for rec in records if "failure" in rec]
    if len(failures) > FAILURE_BUDGET * r:
        raise RuntimeError(
            f"{len(failures)} of {r} replicates failed (budget "
            f"{FAILURE_BUDGET:.0%}); first failure: {failures[0]}"
        )
    ok = [rec for rec in records if "failure" not in rec]
    cond = [rec for rec in ok if "dev" in rec]

    selection_rate = (
        float(np.mean([rec["selection_exact"] for rec in ok])) if ok else math.nan
    )
    l1 = {
        "dantzig": _summary([rec["l1_dantzig"] for rec in ok]),
        "refit": _summary(
            [rec["l1_refit"] for rec in ok if rec["refit_converged"]]
        ),
    }

    coverage = {}
    normality = {}
    for k, j in enumerate(cfg.support):
        flags = np.array([rec["covered"][k] for rec in cond], dtype=float)
        coverage[str(j)] = float(flags.mean()) if flags.size else math.nan
        std = np.array([rec["standardized"][k] for rec in cond])
        normality[str(j)] = {
            "mean": float(std.mean()) if std.size else math.nan,
            "sd": float(std.std(ddof=1)) if std.size > 1 else math.nan,
            "ks": ks_distance_normal(std) if std.size else math.nan,
        }

    hazard_coverage = {}
    independence = {}
    for t in settings.probe_times:
        key = str(t)
        flags = np.array(
            [rec["hazard"][t]["covered"] for rec in cond], dtype=float
        )
        hazard_coverage[key] = float(flags.mean()) if flags.size else math.nan
        w = np.array([rec["hazard"][t]["w_stat"] for rec in cond])
        independence[key] = {
            str(j): _correlation(
                np.array([rec["dev"][k] for rec in cond]), w
            )
            for k, j in enumerate(cfg.support)
        }

    return McReport(
        config=cfg,
        replicates=r,
        failures=len(failures),
        failure_reasons=tuple(failures[:20]),
        selection_exact_rate=selection_rate,
        n_conditioned=len(cond),
        l1_errors=l1,
        coverage=coverage,
        normality=normality,
        hazard_coverage=hazard_coverage,
        independence_check=independence,
    )


def run_mc_study(
    grid: Sequence[GeneratorConfig],
    settings: EstimatorSettings = EstimatorSettings(),
    replicates: int = 500,
    workers: int = 1,
    master_seed: int = 0,
) -> list:
    """Run ``replicates`` pipeline replicates per grid point.

    Returns one :class:`McReport` per config, in grid order.  Replicates
    always execute in spawned worker processes whose numerical libraries
    are pinned to a single thread, and every replicate owns a seed stream
    derived from (master_seed, grid index, replicate index), so the
    report is bit identical for any ``workers`` value.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty config grid")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    tasks = [
        (master_seed, g, r, cfg, settings)
        for g, cfg in enumerate(grid)
        for r in range(replicates)
    ]

    old_env = {v: os.environ.get(v) for v in _THREAD_VARS}
    os.environ.update({v: "1" for v in _THREAD_VARS})
    try:
        ctx = get_context("spawn")
        chunk = max(1, len(tasks) // (8 * workers))
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            results = list(pool.map(_replicate, tasks, chunksize=chunk))
    finally:
        for v, val in old_env.items():
            if val is None:
                os.environ.pop(v, None)
            else:
                os.environ[v] = val

    reports = []
    for g, cfg in enumerate(grid):
        records = results[g * replicates : (g + 1) * replicates]
        reports.append(_aggregate(cfg, settings, records))
    return reports
