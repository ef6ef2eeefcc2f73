import math

import numpy as np
import pytest
import scipy.stats

from sparsecox.stats import ks_distance_normal, normal_cdf, normal_quantile


def test_quantile_matches_scipy_on_grid():
    qs = np.concatenate(
        [
            np.array([1e-12, 1e-9, 1e-6, 1e-4, 0.001, 0.02425]),
            np.linspace(0.01, 0.99, 197),
            np.array([0.975, 0.995, 0.9999, 1 - 1e-9]),
        ]
    )
    for q in qs:
        assert normal_quantile(q) == pytest.approx(
            scipy.stats.norm.ppf(q), abs=1e-9
        ), q


def test_quantile_symmetry():
    for q in [0.51, 0.7, 0.975, 0.999]:
        assert normal_quantile(q) == pytest.approx(-normal_quantile(1 - q), abs=1e-12)


def test_quantile_known_values():
    assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-12)
    assert normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-10)


def test_quantile_domain():
    for q in [0.0, 1.0, -0.1, 1.1]:
        with pytest.raises(ValueError):
            normal_quantile(q)


def test_cdf_quantile_inverse():
    rng = np.random.default_rng(11)
    for x in rng.normal(size=50) * 2:
        assert normal_quantile(normal_cdf(x)) == pytest.approx(x, abs=1e-8)


def test_cdf_matches_scipy():
    for x in np.linspace(-6, 6, 101):
        assert normal_cdf(x) == pytest.approx(scipy.stats.norm.cdf(x), abs=1e-14)


def test_ks_distance_matches_scipy():
    rng = np.random.default_rng(5)
    for _ in range(5):
        sample = rng.normal(size=200)
        ours = ks_distance_normal(sample)
        ref = scipy.stats.kstest(sample, "norm").statistic
        assert ours == pytest.approx(ref, abs=1e-12)


def test_ks_distance_detects_shift():
    rng = np.random.default_rng(6)
    assert ks_distance_normal(rng.normal(size=500)) < 0.08
    assert ks_distance_normal(rng.normal(size=500) + 1.0) > 0.3


def test_ks_empty():
    with pytest.raises(ValueError):
        ks_distance_normal(np.array([]))
