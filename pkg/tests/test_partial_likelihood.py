import math

import numpy as np
import pytest

from sparsecox.dataset import CovariatePath, Subject, SurvivalDataset, event_times
from sparsecox.exceptions import NoEventsError, ScoreOverflowError
from sparsecox.partial_likelihood import (
    evaluate,
    log_partial_likelihood,
    neg_hessian,
    risk_stats,
    score,
    score_process,
)
from conftest import random_dataset


def fd_gradient(f, beta, h=1e-5):
    g = np.zeros_like(beta)
    for j in range(beta.size):
        e = np.zeros_like(beta)
        e[j] = h
        g[j] = (f(beta + e) - f(beta - e)) / (2 * h)
    return g


def brute_score(ds, beta):
    """Per-event oracle using risk_stats directly (no shared sweep)."""
    u = np.zeros(ds.p)
    for t, i in event_times(ds):
        st = risk_stats(ds, beta, t, order=1)
        u += ds.covariates_at(t)[i] - st.s1 / st.s0
    return u / ds.n


# -- frozen worked-example values --------------------------------------------


def test_risk_stats_d1_at_zero(d1):
    st = risk_stats(d1, [0.0, 0.0], 0.2, order=1)
    assert st.s0 == pytest.approx(3.0)
    np.testing.assert_allclose(st.s1, [2.0, 2.0])


def test_risk_stats_single_subject():
    ds = SurvivalDataset.from_arrays([0.7], [True], [[1.5, -0.5]])
    beta = np.array([0.3, 0.8])
    st = risk_stats(ds, beta, 0.5, order=1)
    expect = math.exp(beta @ [1.5, -0.5])
    assert st.s0 == pytest.approx(expect, rel=1e-14)
    np.testing.assert_allclose(st.s1, np.array([1.5, -0.5]) * expect, rtol=1e-14)


def test_risk_stats_empty_flag(d1):
    st = risk_stats(d1, [0.0, 0.0], 0.95, order=2)
    assert st.empty
    assert st.s0 == 0.0
    np.testing.assert_array_equal(st.s1, [0.0, 0.0])
    np.testing.assert_array_equal(st.s2, np.zeros((2, 2)))


def test_risk_stats_cauchy_schwarz(d1):
    rng = np.random.default_rng(0)
    for _ in range(20):
        beta = rng.normal(size=2)
        st = risk_stats(d1, beta, 0.2, order=2)
        M = st.s2 - np.outer(st.s1, st.s1) / st.s0
        assert np.linalg.eigvalsh(M).min() >= -1e-12


def test_loglik_d1_at_zero(d1):
    assert log_partial_likelihood(d1, [0.0, 0.0]) == pytest.approx(
        -(math.log(3) + math.log(2)) / 3, rel=1e-14
    )


def test_loglik_single_event_all_at_risk():
    n = 7
    ds = SurvivalDataset.from_arrays(
        [0.1] + [0.5] * (n - 1),
        [True] + [False] * (n - 1),
        np.arange(n, dtype=float)[:, None],
    )
    assert log_partial_likelihood(ds, [0.0]) == pytest.approx(-math.log(n) / n)


def test_score_d1_at_zero(d1):
    np.testing.assert_allclose(
        score(d1, [0.0, 0.0]), [-1.0 / 18.0, -2.0 / 9.0], atol=1e-15
    )


def test_score_single_subject_is_zero():
    ds = SurvivalDataset.from_arrays([0.4], [True], [[2.0, 3.0]])
    np.testing.assert_allclose(score(ds, [0.5, -0.5]), [0.0, 0.0], atol=1e-15)


def test_neg_hessian_d1_at_zero(d1):
    expect = np.array([[17.0 / 108.0, -1.0 / 27.0], [-1.0 / 27.0, 2.0 / 27.0]])
    np.testing.assert_allclose(neg_hessian(d1, [0.0, 0.0]), expect, atol=1e-15)


def test_neg_hessian_single_subject_zero():
    ds = SurvivalDataset.from_arrays([0.4], [True], [[2.0, 3.0]])
    np.testing.assert_allclose(neg_hessian(ds, [1.0, 1.0]), np.zeros((2, 2)), atol=1e-15)


def test_score_process_d1(d1):
    np.testing.assert_allclose(
        score_process(d1, [0.0, 0.0], 0.3), [1.0 / 9.0, -2.0 / 9.0], atol=1e-15
    )
    np.testing.assert_array_equal(score_process(d1, [0.0, 0.0], 0.0), [0.0, 0.0])
    np.testing.assert_allclose(
        score_process(d1, [0.0, 0.0], 1.0), score(d1, [0.0, 0.0]), atol=1e-15
    )


# -- oracle consistency -------------------------------------------------------


def test_score_matches_finite_difference():
    rng = np.random.default_rng(42)
    for _ in range(30):
        n = rng.integers(5, 50)
        p = rng.integers(1, 7)
        ds = random_dataset(rng, int(n), int(p))
        beta = rng.normal(scale=0.5, size=p)
        u = score(ds, beta)
        fd = fd_gradient(lambda b: log_partial_likelihood(ds, b), beta)
        assert np.max(np.abs(u - fd)) <= 1e-6 * (1 + np.max(np.abs(u)))


def test_neg_hessian_matches_finite_difference():
    rng = np.random.default_rng(43)
    for _ in range(20):
        n = rng.integers(5, 40)
        p = rng.integers(1, 6)
        ds = random_dataset(rng, int(n), int(p))
        beta = rng.normal(scale=0.5, size=p)
        J = neg_hessian(ds, beta)
        fd = np.column_stack(
            [
                fd_gradient(lambda b, j=j: -score(ds, b)[j], beta)
                for j in range(int(p))
            ]
        )
        assert np.max(np.abs(J - fd)) <= 1e-5


def test_score_matches_brute_force():
    rng = np.random.default_rng(44)
    for _ in range(10):
        ds = random_dataset(rng, 30, 4)
        beta = rng.normal(scale=0.5, size=4)
        np.testing.assert_allclose(score(ds, beta), brute_score(ds, beta), atol=1e-12)


def test_neg_hessian_psd():
    rng = np.random.default_rng(45)
    for _ in range(20):
        ds = random_dataset(rng, 25, 5)
        beta = rng.normal(scale=0.6, size=5)
        assert np.linalg.eigvalsh(neg_hessian(ds, beta)).min() >= -1e-10


def test_loglik_concave_along_segments():
    rng = np.random.default_rng(46)
    for _ in range(20):
        ds = random_dataset(rng, 20, 3)
        a = rng.normal(scale=0.5, size=3)
        b = rng.normal(scale=0.5, size=3)
        mid = log_partial_likelihood(ds, (a + b) / 2)
        ends = log_partial_likelihood(ds, a) + log_partial_likelihood(ds, b)
        assert mid >= ends / 2 - 1e-12


def test_location_invariance():
    rng = np.random.default_rng(47)
    ds = random_dataset(rng, 30, 3)
    c = rng.normal(size=3)
    shifted = SurvivalDataset.from_arrays(
        ds.times, ds.events, ds.constant_covariates + c
    )
    beta = rng.normal(scale=0.5, size=3)
    assert log_partial_likelihood(shifted, beta) == pytest.approx(
        log_partial_likelihood(ds, beta), abs=1e-12
    )
    np.testing.assert_allclose(score(shifted, beta), score(ds, beta), atol=1e-12)


# -- restricted evaluation ----------------------------------------------------


def test_restrict_selects_coordinates():
    rng = np.random.default_rng(48)
    ds = random_dataset(rng, 25, 5)
    beta = rng.normal(scale=0.4, size=5)
    idx = [1, 3, 4]
    np.testing.assert_allclose(score(ds, beta, restrict=idx), score(ds, beta)[idx])
    np.testing.assert_allclose(
        neg_hessian(ds, beta, restrict=idx),
        neg_hessian(ds, beta)[np.ix_(idx, idx)],
        atol=1e-14,
    )
    st = risk_stats(ds, beta, 0.3, order=2, restrict=idx)
    full = risk_stats(ds, beta, 0.3, order=2)
    np.testing.assert_allclose(st.s1, full.s1[idx])
    np.testing.assert_allclose(st.s2, full.s2[np.ix_(idx, idx)])


def test_evaluate_consistent_pieces(d1):
    beta = np.array([0.2, -0.3])
    sh = evaluate(d1, beta, order=2)
    assert sh.loglik == pytest.approx(log_partial_likelihood(d1, beta))
    np.testing.assert_allclose(sh.score, score(d1, beta))
    np.testing.assert_allclose(sh.neg_hessian, neg_hessian(d1, beta))


# -- step covariate paths -----------------------------------------------------


def step_dataset():
    return SurvivalDataset(
        [
            Subject(0.3, True, CovariatePath.step([0.25], [[1.0], [2.0]])),
            Subject(0.6, True, CovariatePath.step([0.5], [[0.0], [-1.0]])),
            Subject(0.8, False, CovariatePath.constant([0.5])),
        ]
    )


def test_step_paths_match_brute_force():
    ds = step_dataset()
    beta = np.array([0.4])
    np.testing.assert_allclose(score(ds, beta), brute_score(ds, beta), atol=1e-13)
    fd = fd_gradient(lambda b: log_partial_likelihood(ds, b), beta)
    assert abs(score(ds, beta)[0] - fd[0]) <= 1e-6


def test_step_representation_of_constant_agrees(d1):
    subjects = [
        Subject(
            s.observed_time,
            s.event,
            CovariatePath.step([0.5], [s.covariates.values[0]] * 2),
        )
        for s in d1.subjects
    ]
    ds = SurvivalDataset(subjects)
    beta = np.array([0.3, -0.2])
    assert log_partial_likelihood(ds, beta) == pytest.approx(
        log_partial_likelihood(d1, beta), abs=1e-14
    )
    np.testing.assert_allclose(score(ds, beta), score(d1, beta), atol=1e-14)
    np.testing.assert_allclose(neg_hessian(ds, beta), neg_hessian(d1, beta), atol=1e-14)


# -- guards -------------------------------------------------------------------


def test_overflow_guard(d1):
    with pytest.raises(ScoreOverflowError):
        score(d1, [800.0, 0.0])


def test_no_events_error():
    ds = SurvivalDataset.from_arrays([0.3, 0.6], [False, False], [[1.0], [2.0]])
    with pytest.raises(NoEventsError):
        log_partial_likelihood(ds, [0.0])
    with pytest.raises(NoEventsError):
        score_process(ds, [0.0], 0.5)


def test_dimension_mismatch(d1):
    with pytest.raises(ValueError):
        score(d1, [0.0])
    with pytest.raises(ValueError):
        score(d1, [0.0, np.nan])
