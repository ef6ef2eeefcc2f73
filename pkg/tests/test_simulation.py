import json
import warnings

import numpy as np
import pytest

from sparsecox.diagnostics import matrix_sup_distance
from sparsecox.hazard import nelson_aalen
from sparsecox.partial_likelihood import neg_hessian
from sparsecox.simulation import (
    EstimatorSettings,
    GeneratorConfig,
    McReport,
    generate,
    population_info,
    run_mc_study,
)


# ------------------------------------------------------------------ config


def test_config_validation():
    with pytest.raises(ValueError, match="support"):
        GeneratorConfig(n=10, p=3, beta0_values=(1.0,), support=(0, 1))
    with pytest.raises(ValueError, match="range"):
        GeneratorConfig(n=10, p=3, beta0_values=(1.0,), support=(5,))
    with pytest.raises(ValueError, match="distinct"):
        GeneratorConfig(n=10, p=3, beta0_values=(1.0, 1.0), support=(0, 0))
    with pytest.raises(ValueError, match="signal_floor"):
        GeneratorConfig(n=10, p=3, beta0_values=(0.01,), signal_floor=0.05)
    with pytest.raises(ValueError, match="baseline"):
        GeneratorConfig(n=10, p=3, baseline="gamma")
    with pytest.raises(ValueError, match="censoring"):
        GeneratorConfig(n=10, p=3, censoring="type2")
    with pytest.raises(ValueError, match="covariate_law"):
        GeneratorConfig(n=10, p=3, covariate_law="gaussian")
    with pytest.raises(ValueError, match="ar_rho"):
        GeneratorConfig(n=10, p=3, ar_rho=1.0)


def test_config_beta0_scatter():
    cfg = GeneratorConfig(n=10, p=5, beta0_values=(1.0, -2.0), support=(1, 4))
    assert cfg.sparsity == 2
    assert cfg.beta0().tolist() == [0.0, 1.0, 0.0, 0.0, -2.0]
    # Default support is the leading coordinates.
    cfg2 = GeneratorConfig(n=10, p=5, beta0_values=(0.5,))
    assert cfg2.support == (0,)


def test_cumulative_baseline_forms():
    cfg = GeneratorConfig(n=10, p=2, baseline="constant", baseline_rate=2.0)
    assert cfg.cumulative_baseline(0.3) == pytest.approx(0.6)
    cfg_w = GeneratorConfig(
        n=10, p=2, baseline="weibull", weibull_shape=2.0, weibull_scale=1.0
    )
    assert cfg_w.cumulative_baseline(0.5) == pytest.approx(0.25)


# --------------------------------------------------------------- generator


def test_generate_deterministic():
    cfg = GeneratorConfig(n=200, p=4, beta0_values=(1.0,), seed=42)
    ds1, t1 = generate(cfg)
    ds2, t2 = generate(cfg)
    assert np.array_equal(ds1.times, ds2.times)
    assert np.array_equal(ds1.events, ds2.events)
    assert np.array_equal(ds1.constant_covariates, ds2.constant_covariates)
    assert np.array_equal(t1.latent_event_times, t2.latent_event_times)


def test_null_exponential_event_rate():
    # With beta=0 and unit constant baseline, X = min(Exp(1), 1) and the
    # event probability is 1 - exp(-1).
    cfg = GeneratorConfig(n=10000, p=2, seed=42)
    ds, _ = generate(cfg)
    assert ds.events.mean() == pytest.approx(1.0 - np.exp(-1.0), abs=0.02)


def test_weibull_baseline_nelson_aalen():
    cfg = GeneratorConfig(
        n=4000,
        p=2,
        baseline="weibull",
        weibull_shape=2.0,
        weibull_scale=1.0,
        seed=3,
    )
    ds, truth = generate(cfg)
    na = nelson_aalen(ds)
    assert truth.cumulative_baseline(0.5) == 0.25
    assert na.cumulative_at(0.5) == pytest.approx(0.25, abs=0.04)


def test_censoring_correctness():
    cfg = GeneratorConfig(
        n=500, p=3, censoring="uniform", censor_max=0.8, seed=9
    )
    ds, truth = generate(cfg)
    assert ds.times.max() <= 1.0
    assert ds.times.min() > 0.0
    cmin = np.minimum(truth.censor_times, 1.0)
    assert np.array_equal(ds.events, truth.latent_event_times <= cmin)
    # Uniform censoring produces strictly more censored subjects than the
    # administrative scheme on the same stream.
    ds_admin, _ = generate(GeneratorConfig(n=500, p=3, seed=9))
    assert ds.events.sum() < ds_admin.events.sum()


def test_degenerate_draw_warns():
    cfg = GeneratorConfig(
        n=40, p=2, censoring="uniform", censor_max=1e-4, seed=1
    )
    with pytest.warns(RuntimeWarning, match="degenerate"):
        ds, truth = generate(cfg)
    assert truth.degenerate


def test_rademacher_and_ar_options():
    cfg = GeneratorConfig(n=300, p=6, covariate_law="rademacher", seed=5)
    ds, _ = generate(cfg)
    z = ds.constant_covariates
    assert set(np.unique(z)) == {-1.0, 1.0}

    cfg_ar = GeneratorConfig(n=2000, p=6, ar_rho=0.7, seed=5)
    ds_ar, _ = generate(cfg_ar)
    z = ds_ar.constant_covariates
    assert np.abs(z).max() <= 1.0
    r = np.corrcoef(z[:, 2], z[:, 3])[0, 1]
    assert r > 0.4


# ---------------------------------------------------------- population info


def test_population_info_single_draw_and_symmetry():
    cfg = GeneratorConfig(n=60, p=4, beta0_values=(0.5,), seed=11)
    beta = np.zeros(4)
    m1 = population_info(cfg, beta, r_inner=1)
    rng = np.random.default_rng(np.random.SeedSequence((11, 7, 0)))
    ds0, _ = generate(cfg, rng=rng)
    assert np.allclose(m1, neg_hessian(ds0, beta), atol=1e-15)
    m = population_info(cfg, beta, r_inner=5)
    assert np.max(np.abs(m - m.T)) <= 1e-12
    assert np.linalg.eigvalsh(m).min() >= -1e-10
    with pytest.raises(ValueError):
        population_info(cfg, beta, r_inner=0)


def test_population_info_variance_reduction():
    cfg = GeneratorConfig(n=80, p=5, beta0_values=(0.8,), seed=23)
    beta = cfg.beta0()
    ref = population_info(cfg, beta, r_inner=400)
    near = population_info(cfg, beta, r_inner=200)
    far = population_info(cfg, beta, r_inner=10)
    assert matrix_sup_distance(near, ref) < matrix_sup_distance(far, ref)


def test_sup_distance_to_population_shrinks_in_n():
    # The plug-in information concentrates around its population value as
    # n grows: medians of the sup distance over replicates decrease.
    meds = []
    for n in (50, 400):
        cfg = GeneratorConfig(n=n, p=4, beta0_values=(0.7,), seed=31)
        beta = cfg.beta0()
        pop = population_info(cfg, beta, r_inner=120)
        dists = []
        for k in range(12):
            rng = np.random.default_rng(np.random.SeedSequence((99, n, k)))
            ds, _ = generate(cfg, rng=rng)
            dists.append(matrix_sup_distance(neg_hessian(ds, beta), pop))
        meds.append(np.median(dists))
    assert meds[1] < meds[0]


# ----------------------------------------------------------------- studies


def test_settings_validation():
    with pytest.raises(ValueError, match="level"):
        EstimatorSettings(level=1.0)
    with pytest.raises(ValueError, match="probe"):
        EstimatorSettings(probe_times=(0.0,))


def test_smoke_study_single_replicate():
    cfg = GeneratorConfig(n=80, p=5, beta0_values=(1.0,), seed=2)
    (rep,) = run_mc_study([cfg], replicates=1, workers=1, master_seed=5)
    assert isinstance(rep, McReport)
    assert rep.replicates == 1
    assert rep.failures == 0
    assert 0.0 <= rep.selection_exact_rate <= 1.0
    assert set(rep.l1_errors) == {"dantzig", "refit"}
    assert set(rep.coverage) == {"0"}
    assert set(rep.hazard_coverage) == {"0.25", "0.5", "0.75"}
    d = rep.to_dict()
    json.dumps(d, sort_keys=True)  # serializable


def test_null_model_selects_empty_support():
    cfg = GeneratorConfig(n=100, p=20, seed=0)
    (rep,) = run_mc_study([cfg], replicates=100, workers=2, master_seed=3)
    assert rep.config.support == ()
    assert rep.selection_exact_rate >= 0.95
    assert rep.coverage == {}


def test_selection_rate_and_l1_error_trends():
    grid = [
        GeneratorConfig(n=n, p=50, beta0_values=(1.0, -1.0), seed=0)
        for n in (100, 200, 400)
    ]
    reports = run_mc_study(grid, replicates=30, workers=4, master_seed=77)
    rates = [rep.selection_exact_rate for rep in reports]
    assert rates[0] <= rates[1] + 0.05
    assert rates[1] <= rates[2] + 0.05
    assert rates[2] >= 0.9
    l1d = [rep.l1_errors["dantzig"]["median"] for rep in reports]
    assert l1d[0] > l1d[1] > l1d[2]
    l1r = [rep.l1_errors["refit"]["median"] for rep in reports]
    assert l1r[0] > l1r[1] > l1r[2]
    assert all(rep.failures == 0 for rep in reports)


def test_reproducible_across_worker_counts():
    cfg = GeneratorConfig(n=60, p=8, beta0_values=(1.0,), seed=4)
    (a,) = run_mc_study([cfg], replicates=6, workers=1, master_seed=11)
    (b,) = run_mc_study([cfg], replicates=6, workers=3, master_seed=11)
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(
        b.to_dict(), sort_keys=True
    )


def test_failure_budget_aborts_study():
    # Near-total censoring leaves no events, so every replicate fails.
    cfg = GeneratorConfig(
        n=30, p=3, censoring="uniform", censor_max=1e-4, seed=8
    )
    with pytest.raises(RuntimeError, match="replicates failed"):
        run_mc_study([cfg], replicates=5, workers=1, master_seed=1)


def test_study_argument_validation():
    cfg = GeneratorConfig(n=20, p=2, seed=0)
    with pytest.raises(ValueError):
        run_mc_study([], replicates=1)
    with pytest.raises(ValueError):
        run_mc_study([cfg], replicates=0)
    with pytest.raises(ValueError):
        run_mc_study([cfg], replicates=1, workers=0)
