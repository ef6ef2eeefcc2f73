"""Command-line front end.

Four subcommands cover the workflow end to end:

``fit``
    Estimate on a survival CSV: Dantzig selection, threshold support,
    restricted MLE with Wald intervals, Breslow baseline hazard.  Writes
    ``fit.json`` and ``hazard.csv`` into the output directory.
``simulate``
    Draw one dataset from a generator config and write it as a CSV next
    to a ``truth.json`` recording the hidden state.
``mc``
    Run a Monte Carlo study over a grid of generator configs, writing
    ``report.json`` and ``report.csv`` plus a one-line summary per grid
    point on stdout.
``diagnose``
    Re-derive the refit for a stored fit and report the compatibility
    factor of the plug-in information matrix together with a martingale
    residual summary.

Exit codes: 0 on success, 1 on usage or input errors, 2 on numerical
failure (non-convergence, infeasibility, overflow).  ``fit`` still
writes its output files before exiting with 2 so the flags can be
inspected.  All outputs carry a metadata block (package version, seed,
hash of the effective settings) and no timestamps, so reruns with the
same inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .dantzig import TuningSchedule, gamma_value
from .dataset import IngestOptions, load_csv, save_csv
from .diagnostics import (
    EXACT_SPARSITY_LIMIT,
    ConeProblem,
    compatibility_factor,
    martingale_residuals,
)
from .estimator import DantzigCox
from .exceptions import (
    DataIngestionError,
    GammaInfeasibleError,
    NoEventsError,
    ScoreOverflowError,
    SingularInformationError,
    SparseCoxError,
    UnconvergedFitError,
)
from .hazard import breslow_estimate, hazard_confidence_band
from .partial_likelihood import neg_hessian
from .refit import SelectedSupport, refit_mle
from .simulation import EstimatorSettings, GeneratorConfig, generate, run_mc_study

__all__ = ["main", "build_parser"]

#: Keys accepted in a [grid] section of a study config.
_GRID_KEYS = {
    "n",
    "p",
    "beta0",
    "support",
    "signal_floor",
    "baseline",
    "baseline_rate",
    "weibull_shape",
    "weibull_scale",
    "censoring",
    "censor_max",
    "covariate_law",
    "ar_rho",
    "seed",
}

_STUDY_KEYS = {"replicates", "master_seed", "level", "probe_times"}
_ESTIMATOR_KEYS = {"alpha", "zeta", "c_gamma", "gamma"}

_NUMERICAL_ERRORS = (
    GammaInfeasibleError,
    UnconvergedFitError,
    SingularInformationError,
    ScoreOverflowError,
)

_INPUT_ERRORS = (
    DataIngestionError,
    NoEventsError,
    OSError,
    ValueError,
    KeyError,
    configparser.Error,
)


# ---------------------------------------------------------------------------
# small output helpers


def _clean(obj):
    """Make a payload JSON-strict: tuples to lists, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def _settings_hash(settings: dict) -> str:
    """Stable hash of the effective settings, excluding paths and threads."""
    canon = json.dumps(_clean(settings), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _metadata(seed: Optional[int], settings: dict) -> dict:
    return {
        "version": __version__,
        "seed": seed,
        "settings_hash": _settings_hash(settings),
    }


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _metadata_comment(meta: dict) -> str:
    seed = "-" if meta["seed"] is None else meta["seed"]
    return (
        f"# version={meta['version']} seed={seed} "
        f"settings_hash={meta['settings_hash']}\n"
    )


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# fit


def _fit_settings(args) -> dict:
    return {
        "command": "fit",
        "gamma": args.gamma,
        "alpha": args.alpha,
        "c_gamma": args.c_gamma,
        "level": args.level,
        "normalize_time": args.normalize_time,
        "standardize": args.standardize,
    }


def cmd_fit(args) -> int:
    if not os.path.isfile(args.input):
        _fail(f"input file not found: {args.input}")
        return 1
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    ds = load_csv(args.input, IngestOptions(normalize_time=args.normalize_time))
    X = ds.constant_covariates
    y = np.column_stack([ds.times * ds.time_scale, ds.events.astype(float)])

    meta = _metadata(None, _fit_settings(args))
    est = DantzigCox(
        gamma=args.gamma,
        alpha=args.alpha,
        c_gamma=args.c_gamma,
        level=args.level,
        standardize=args.standardize,
        normalize_time=args.normalize_time,
    )
    try:
        est.fit(X, y)
    except _NUMERICAL_ERRORS as exc:
        # No usable estimate at all: record the failure and stop with 2.
        _write_json(
            out_dir / "fit.json",
            {
                "metadata": meta,
                "n": ds.n,
                "p": ds.p,
                "time_scale": ds.time_scale,
                "gamma": gamma_value(
                    ds.n,
                    ds.p,
                    TuningSchedule(
                        alpha=args.alpha,
                        c_gamma=args.c_gamma,
                        explicit_gamma=args.gamma,
                    ),
                ),
                "converged": False,
                "error": str(exc),
            },
        )
        _fail(str(exc))
        return 2

    sel = est.selector_fit_
    res = est.result_
    payload = {
        "metadata": meta,
        "n": int(ds.n),
        "p": int(ds.p),
        "time_scale": float(est.time_scale_),
        "level": args.level,
        "gamma": float(est.gamma_),
        "selector": {
            "converged": bool(sel.converged),
            "outer_iterations": int(sel.outer_iterations),
            "feasibility_residual": float(sel.feasibility_residual),
        },
        "beta_dantzig": est.dantzig_coef_,
        "support": [int(j) for j in est.support_],
        "beta_refit": est.coef_,
        "covariance": est.covariance_,
        "wald_intervals": est.confidence_intervals_,
        "refit": {
            "converged": bool(res.converged),
            "newton_iterations": int(res.newton_iterations),
            "loglik": float(res.loglik),
            "min_eigenvalue": float(res.min_eigenvalue),
            "flag": res.flag,
        },
        "converged": bool(est.converged_),
    }
    _write_json(out_dir / "fit.json", payload)

    if est.converged_:
        _write_hazard_csv(
            out_dir / "hazard.csv",
            est.baseline_hazard_,
            est.time_scale_,
            args.level,
            meta,
        )
        print(
            f"fit: n={ds.n} p={ds.p} gamma={est.gamma_:.6g} "
            f"selected={len(est.support_)} loglik={res.loglik:.6g}"
        )
        return 0

    _fail(f"refit did not converge: {res.flag}")
    return 2


def _write_hazard_csv(path, est_hazard, time_scale, level, meta) -> None:
    """Jump-level hazard table on the original time axis."""
    band = hazard_confidence_band(est_hazard, level=level, total=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_metadata_comment(meta))
        writer = csv.writer(fh)
        writer.writerow(
            ["time", "jump", "cumulative", "variance", "var_total", "ci_low", "ci_high"]
        )
        for k, (_, lo, hi) in enumerate(band):
            writer.writerow(
                [
                    repr(float(est_hazard.jump_times[k] * time_scale)),
                    repr(float(est_hazard.jumps[k])),
                    repr(float(est_hazard.cumulative[k])),
                    repr(float(est_hazard.variance[k])),
                    repr(float(est_hazard.var_total[k])),
                    repr(lo),
                    repr(hi),
                ]
            )


# ---------------------------------------------------------------------------
# study config parsing


def _split_values(raw: str) -> list:
    return raw.replace(",", " ").split()


def _parse_typed(section: str, key: str, raw: str, cast, kind: str):
    try:
        return cast(raw)
    except ValueError:
        raise ValueError(
            f"section [{section}], key '{key}': expected {kind}, got {raw!r}"
        ) from None


def _parse_list(section: str, key: str, raw: str, cast, kind: str) -> list:
    return [_parse_typed(section, key, tok, cast, kind) for tok in _split_values(raw)]


def _check_keys(section: str, present, allowed) -> None:
    unknown = sorted(set(present) - allowed)
    if unknown:
        raise ValueError(
            f"section [{section}]: unknown key(s) {', '.join(unknown)}; "
            f"allowed: {', '.join(sorted(allowed))}"
        )


def _parse_study_config(path: str):
    """Read an INI study file into (grid configs, settings, study params).

    The parser reports malformed lines with their line numbers (via
    configparser) and missing or mistyped keys by section and name.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh, source=os.path.basename(path))

    known = {"study", "estimator"}
    for section in cp.sections():
        if section in known or section == "grid" or section.startswith("grid:"):
            continue
        raise ValueError(
            f"unknown section [{section}]; expected [study], [estimator], "
            f"or [grid] / [grid:NAME]"
        )

    study = {
        "replicates": 500,
        "master_seed": 0,
        "level": 0.95,
        "probe_times": (0.25, 0.5, 0.75),
    }
    if cp.has_section("study"):
        sec = cp["study"]
        _check_keys("study", sec.keys(), _STUDY_KEYS)
        if "replicates" in sec:
            study["replicates"] = _parse_typed(
                "study", "replicates", sec["replicates"], int, "an integer"
            )
        if "master_seed" in sec:
            study["master_seed"] = _parse_typed(
                "study", "master_seed", sec["master_seed"], int, "an integer"
            )
        if "level" in sec:
            study["level"] = _parse_typed(
                "study", "level", sec["level"], float, "a float"
            )
        if "probe_times" in sec:
            study["probe_times"] = tuple(
                _parse_list("study", "probe_times", sec["probe_times"], float, "floats")
            )

    sched_kwargs = {}
    if cp.has_section("estimator"):
        sec = cp["estimator"]
        _check_keys("estimator", sec.keys(), _ESTIMATOR_KEYS)
        for key, target in (
            ("alpha", "alpha"),
            ("zeta", "zeta"),
            ("c_gamma", "c_gamma"),
            ("gamma", "explicit_gamma"),
        ):
            if key in sec:
                sched_kwargs[target] = _parse_typed(
                    "estimator", key, sec[key], float, "a float"
                )

    settings = EstimatorSettings(
        schedule=TuningSchedule(**sched_kwargs),
        level=study["level"],
        probe_times=study["probe_times"],
    )

    grid_sections = [
        s for s in cp.sections() if s == "grid" or s.startswith("grid:")
    ]
    if not grid_sections:
        raise ValueError(f"no [grid] section in {path}")

    grid = []
    for section in grid_sections:
        sec = cp[section]
        _check_keys(section, sec.keys(), _GRID_KEYS)
        for required in ("n", "p"):
            if required not in sec:
                raise ValueError(
                    f"missing key '{required}' in section [{section}] of {path}"
                )
        ns = _parse_list(section, "n", sec["n"], int, "integers")
        ps = _parse_list(section, "p", sec["p"], int, "integers")
        kwargs = {}
        if "beta0" in sec:
            kwargs["beta0_values"] = tuple(
                _parse_list(section, "beta0", sec["beta0"], float, "floats")
            )
        if "support" in sec:
            kwargs["support"] = tuple(
                _parse_list(section, "support", sec["support"], int, "integers")
            )
        for key in ("signal_floor", "baseline_rate", "weibull_shape",
                    "weibull_scale", "censor_max", "ar_rho"):
            if key in sec:
                kwargs[key] = _parse_typed(section, key, sec[key], float, "a float")
        for key in ("baseline", "censoring", "covariate_law"):
            if key in sec:
                kwargs[key] = sec[key].strip()
        if "seed" in sec:
            kwargs["seed"] = _parse_typed(section, "seed", sec["seed"], int, "an integer")
        for n in ns:
            for p in ps:
                grid.append(GeneratorConfig(n=n, p=p, **kwargs))
    return grid, settings, study


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    grid, _, study = _parse_study_config(args.config)
    if len(grid) != 1:
        _fail(
            f"config expands to {len(grid)} grid points; "
            f"simulate needs exactly one"
        )
        return 1
    cfg = grid[0]
    seed = args.seed if args.seed is not None else cfg.seed
    if seed != cfg.seed:
        cfg = GeneratorConfig(
            n=cfg.n,
            p=cfg.p,
            beta0_values=cfg.beta0_values,
            support=cfg.support,
            signal_floor=cfg.signal_floor,
            baseline=cfg.baseline,
            baseline_rate=cfg.baseline_rate,
            weibull_shape=cfg.weibull_shape,
            weibull_scale=cfg.weibull_scale,
            censoring=cfg.censoring,
            censor_max=cfg.censor_max,
            covariate_law=cfg.covariate_law,
            ar_rho=cfg.ar_rho,
            seed=seed,
        )

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ds, truth = generate(cfg)

    settings = {
        "command": "simulate",
        "config": _config_dict(cfg),
        "study": {"master_seed": study["master_seed"]},
    }
    meta = _metadata(seed, settings)

    csv_path = out_dir / "dataset.csv"
    save_csv(ds, str(csv_path))
    body = csv_path.read_text(encoding="utf-8")
    csv_path.write_text(_metadata_comment(meta) + body, encoding="utf-8")

    n_events = int(ds.events.sum())
    _write_json(
        out_dir / "truth.json",
        {
            "metadata": meta,
            "config": _config_dict(cfg),
            "beta0": truth.beta0,
            "support": list(truth.support),
            "n": cfg.n,
            "p": cfg.p,
            "n_events": n_events,
            "event_rate": n_events / cfg.n,
            "degenerate": bool(truth.degenerate),
        },
    )
    print(f"simulate: n={cfg.n} p={cfg.p} events={n_events} seed={seed}")
    return 0


def _config_dict(cfg: GeneratorConfig) -> dict:
    return {
        "n": cfg.n,
        "p": cfg.p,
        "beta0_values": list(cfg.beta0_values),
        "support": list(cfg.support),
        "signal_floor": cfg.signal_floor,
        "baseline": cfg.baseline,
        "baseline_rate": cfg.baseline_rate,
        "weibull_shape": cfg.weibull_shape,
        "weibull_scale": cfg.weibull_scale,
        "censoring": cfg.censoring,
        "censor_max": cfg.censor_max,
        "covariate_law": cfg.covariate_law,
        "ar_rho": cfg.ar_rho,
        "seed": cfg.seed,
    }


# ---------------------------------------------------------------------------
# mc


def _nanmean(values) -> float:
    arr = [v for v in values if not math.isnan(v)]
    return float(np.mean(arr)) if arr else math.nan


def _nanmax(values) -> float:
    arr = [v for v in values if not math.isnan(v)]
    return float(max(arr)) if arr else math.nan


def _report_row(index: int, rep) -> dict:
    cfg = rep.config
    ks = _nanmax(v["ks"] for v in rep.normality.values())
    return {
        "grid_index": index,
        "n": cfg.n,
        "p": cfg.p,
        "sparsity": cfg.sparsity,
        "replicates": rep.replicates,
        "failures": rep.failures,
        "selection_exact_rate": rep.selection_exact_rate,
        "n_conditioned": rep.n_conditioned,
        "l1_dantzig_median": rep.l1_errors["dantzig"]["median"],
        "l1_refit_median": rep.l1_errors["refit"]["median"],
        "coverage_mean": _nanmean(rep.coverage.values()),
        "ks_max": ks,
        "hazard_coverage_mean": _nanmean(rep.hazard_coverage.values()),
        "independence_max_abs": _nanmax(
            abs(r)
            for per_t in rep.independence_check.values()
            for r in per_t.values()
            if not math.isnan(r)
        ),
    }


def cmd_mc(args) -> int:
    grid, settings, study = _parse_study_config(args.config)
    workers = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if workers < 1:
        _fail(f"--threads must be at least 1, got {workers}")
        return 1
    master_seed = args.seed if args.seed is not None else study["master_seed"]

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    reports = run_mc_study(
        grid,
        settings,
        replicates=study["replicates"],
        workers=workers,
        master_seed=master_seed,
    )

    settings_dict = {
        "command": "mc",
        "replicates": study["replicates"],
        "level": settings.level,
        "probe_times": list(settings.probe_times),
        "schedule": {
            "alpha": settings.schedule.alpha,
            "zeta": settings.schedule.zeta,
            "c_gamma": settings.schedule.c_gamma,
            "explicit_gamma": settings.schedule.explicit_gamma,
        },
        "grid": [_config_dict(cfg) for cfg in grid],
    }
    meta = _metadata(master_seed, settings_dict)

    _write_json(
        out_dir / "report.json",
        {
            "metadata": meta,
            "replicates": study["replicates"],
            "reports": [rep.to_dict() for rep in reports],
        },
    )

    rows = [_report_row(i, rep) for i, rep in enumerate(reports)]
    header = list(rows[0].keys())
    with open(out_dir / "report.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(_metadata_comment(meta))
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    repr(v) if isinstance(v, float) else v
                    for v in (row[k] for k in header)
                ]
            )

    for row in rows:
        print(
            f"grid[{row['grid_index']}] n={row['n']} p={row['p']} "
            f"S={row['sparsity']}: selection={row['selection_exact_rate']:.3f} "
            f"coverage={row['coverage_mean']:.3f} ks={row['ks_max']:.3f}"
        )
    return 0


# ---------------------------------------------------------------------------
# diagnose


def cmd_diagnose(args) -> int:
    if args.self_test:
        prob = ConeProblem(np.eye(4), (0, 1))
        kappa = compatibility_factor(prob)
        print(f"self-test: kappa(identity, S=2) = {kappa:.12g} (expected 1)")
        return 0

    if args.input is None or args.output_dir is None:
        _fail("diagnose needs --input (dataset CSV) and --output-dir (fit directory)")
        return 1
    fit_path = Path(args.output_dir) / "fit.json"
    if not fit_path.is_file():
        _fail(f"fit artifact not found: {fit_path}")
        return 1
    if not os.path.isfile(args.input):
        _fail(f"input file not found: {args.input}")
        return 1

    with open(fit_path, encoding="utf-8") as fh:
        fit_doc = json.load(fh)
    if not fit_doc.get("converged", False):
        _fail("stored fit did not converge; nothing to diagnose")
        return 1

    ds = load_csv(args.input, IngestOptions(normalize_time=args.normalize_time))
    if ds.p != fit_doc["p"] or ds.n != fit_doc["n"]:
        _fail(
            f"dataset shape (n={ds.n}, p={ds.p}) does not match the fit "
            f"(n={fit_doc['n']}, p={fit_doc['p']})"
        )
        return 1

    support = tuple(int(j) for j in fit_doc["support"])
    gamma = float(fit_doc["gamma"])
    level = float(fit_doc.get("level", 0.95))

    # Re-derive the restricted MLE from the stored support; the result is
    # deterministic, so agreement with the stored coefficients doubles as
    # an integrity check on the artifacts.
    res = refit_mle(ds, SelectedSupport(support, gamma), level=level)
    stored = np.asarray(fit_doc["beta_refit"], dtype=float)
    consistent = bool(
        stored.shape == res.beta2.shape
        and np.allclose(stored, res.beta2, rtol=1e-6, atol=1e-8)
    )

    est_hazard = breslow_estimate(ds, res)
    residuals = martingale_residuals(ds, res, est_hazard)

    method = "exact_orthant" if args.method == "exact" else "sampled"
    if support and method == "exact_orthant" and len(support) > EXACT_SPARSITY_LIMIT:
        _fail(
            f"support size {len(support)} exceeds the exact enumeration "
            f"limit ({EXACT_SPARSITY_LIMIT}); rerun with --method sampled"
        )
        return 1

    if support:
        info = neg_hessian(ds, res.beta2)
        prob = ConeProblem(info, support)
        kappa_block = {
            "value": compatibility_factor(prob, method=method),
            "method": method,
            "support": list(support),
            "sparsity": len(support),
        }
    else:
        kappa_block = None

    settings = {
        "command": "diagnose",
        "method": method,
        "normalize_time": args.normalize_time,
        "fit_settings_hash": fit_doc["metadata"]["settings_hash"],
    }
    payload = {
        "metadata": _metadata(None, settings),
        "n": ds.n,
        "p": ds.p,
        "support": list(support),
        "kappa": kappa_block,
        "residuals": {
            "sum": float(residuals.sum()),
            "min": float(residuals.min()),
            "max": float(residuals.max()),
            "mean_abs": float(np.abs(residuals).mean()),
        },
        "refit_consistent": consistent,
    }
    _write_json(Path(args.output_dir) / "diagnostics.json", payload)

    if kappa_block is None:
        print("diagnose: empty support, no compatibility factor to report")
    else:
        print(
            f"diagnose: kappa={kappa_block['value']:.6g} ({method}, "
            f"S={len(support)}), residual sum={float(residuals.sum()):.3e}"
        )
    return 0


# ---------------------------------------------------------------------------
# parser and entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsecox",
        description="Sparse Cox estimation: Dantzig selection, post-selection "
        "inference, baseline hazard, and Monte Carlo studies.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="estimate on a survival CSV")
    p_fit.add_argument("--input", required=True, help="dataset CSV path")
    p_fit.add_argument("--output-dir", required=True)
    p_fit.add_argument("--gamma", type=float, default=None,
                       help="explicit tuning level (overrides the schedule)")
    p_fit.add_argument("--alpha", type=float, default=0.5)
    p_fit.add_argument("--c-gamma", type=float, default=0.5, dest="c_gamma")
    p_fit.add_argument("--level", type=float, default=0.95)
    p_fit.add_argument("--normalize-time", action="store_true",
                       help="rescale times into (0, 1] by their maximum")
    p_fit.add_argument("--standardize", action="store_true",
                       help="select on unit-variance covariates, report on "
                       "the original scale")
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="draw one dataset from a config")
    p_sim.add_argument("--config", required=True, help="study config (INI)")
    p_sim.add_argument("--output-dir", required=True)
    p_sim.add_argument("--seed", type=int, default=None,
                       help="override the config's generator seed")
    p_sim.set_defaults(func=cmd_simulate)

    p_mc = sub.add_parser("mc", help="run a Monte Carlo study")
    p_mc.add_argument("--config", required=True, help="study config (INI)")
    p_mc.add_argument("--output-dir", required=True)
    p_mc.add_argument("--seed", type=int, default=None,
                      help="override the config's master seed")
    p_mc.add_argument("--threads", type=int, default=None,
                      help="worker processes (default: all cores); results "
                      "are identical for any thread count")
    p_mc.set_defaults(func=cmd_mc)

    p_diag = sub.add_parser(
        "diagnose", help="compatibility factor and residuals for a stored fit"
    )
    p_diag.add_argument("--input", default=None, help="dataset CSV path")
    p_diag.add_argument("--output-dir", default=None,
                        help="directory holding fit.json; receives "
                        "diagnostics.json")
    p_diag.add_argument("--method", choices=("exact", "sampled"),
                        default="exact")
    p_diag.add_argument("--normalize-time", action="store_true")
    p_diag.add_argument("--self-test", action="store_true",
                        help="check kappa of the identity matrix and exit")
    p_diag.set_defaults(func=cmd_diagnose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help/--version, 2 for usage errors; the
        # contract reserves 2 for numerical failure, so usage maps to 1.
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except _NUMERICAL_ERRORS as exc:
        _fail(str(exc))
        return 2
    except RuntimeError as exc:
        # Study-level aborts (failure budget exceeded) are numerical too.
        _fail(str(exc))
        return 2
    except _INPUT_ERRORS as exc:
        _fail(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
