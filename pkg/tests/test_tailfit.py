import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracta.synth import gen_inverse_cdf_samples
from fracta.tailfit import (ccdf_from_points, empirical_ccdf, fit_power_tail, fit_stretched_exponential,
                            hill_estimator, models_comparable, select_tail_region)


def test_four_point_sample():
    c = empirical_ccdf([1, 2, 3, 4])
    sigma = np.std([1, 2, 3, 4])
    np.testing.assert_allclose(c.x, np.array([1, 2, 3, 4]) / sigma)
    np.testing.assert_array_equal(c.p, [1.0, 0.75, 0.5, 0.25])
    # first support point above 2/sigma carries P(X > 2)
    k = np.searchsorted(c.x, 2 / sigma, side="right")
    assert c.p[k] == 0.5


def test_zeros_count_but_are_not_support():
    c = empirical_ccdf([0, 0, 1, 3])
    assert c.n == 4
    assert c.sigma == np.std([0, 0, 1, 3])
    np.testing.assert_array_equal(c.p, [0.5, 0.25])


def test_take_abs():
    a = empirical_ccdf([-3.0, 1.0, -2.0, 4.0], take_abs=True)
    b = empirical_ccdf([3.0, 1.0, 2.0, 4.0])
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.p, b.p)


def test_degenerate_sample():
    with pytest.raises(ValueError):
        empirical_ccdf([2.0] * 10)
    with pytest.raises(ValueError):
        empirical_ccdf(np.arange(50.0), min_n=100)


def test_matches_rank_over_n():
    v = gen_inverse_cdf_samples("pareto", 2000, 3, gamma=1.5)
    c = empirical_ccdf(v)
    sigma = np.std(v)
    for x, p in zip(c.x[::97], c.p[::97]):
        assert p == np.sum(v >= x * sigma * (1 - 1e-15)) / len(v)
    assert c.p[-1] >= 1 / len(v)
    assert np.all(np.diff(c.x) > 0) and np.all(np.diff(c.p) < 0)


@given(st.floats(1e-3, 1e3))
def test_scale_invariance(k):
    v = gen_inverse_cdf_samples("weibull", 3000, 11, beta=0.5)
    a, b = empirical_ccdf(v), empirical_ccdf(v * k)
    np.testing.assert_allclose(b.x, a.x, rtol=1e-12)
    np.testing.assert_array_equal(b.p, a.p)
    ra, rb = select_tail_region(a), select_tail_region(b)
    for fit in (fit_power_tail, fit_stretched_exponential):
        assert fit(b, rb).exponent == pytest.approx(fit(a, ra).exponent, rel=1e-12, abs=1e-12)


def test_exact_power_law():
    x = np.logspace(0, 2, 40)
    fit = fit_power_tail(ccdf_from_points(x, x ** -2.0), (x[0], x[-1]))
    assert fit.exponent == pytest.approx(2.0, abs=1e-12)
    assert fit.goodness < 1e-10
    assert fit.conforming and fit.n_points == 40


def test_exact_stretched_exponential():
    x = np.logspace(-1, 1.3, 40)
    fit = fit_stretched_exponential(ccdf_from_points(x, np.exp(-x ** 0.5)), (x[0], x[-1]))
    assert fit.exponent == pytest.approx(0.5, abs=1e-12)
    assert fit.scale == pytest.approx(1.0, abs=1e-10)
    assert fit.goodness < 1e-10
    assert fit.conforming


def test_stretched_drops_unit_p():
    x = np.logspace(-1, 1, 30)
    p = np.exp(-x ** 0.5)
    p[:3] = 1.0
    fit = fit_stretched_exponential(ccdf_from_points(x, p), (x[0], x[-1]))
    assert fit.n_points == 27
    assert fit.exponent == pytest.approx(0.5, abs=1e-12)


def test_nonconforming_beta_is_flagged():
    x = np.logspace(-1, 1, 30)
    fit = fit_stretched_exponential(ccdf_from_points(x, np.exp(-x ** 1.5)), (x[0], x[-1]))
    assert fit.exponent == pytest.approx(1.5)
    assert not fit.conforming


def test_too_few_points():
    x = np.logspace(0, 1, 8)
    with pytest.raises(ValueError):
        fit_power_tail(ccdf_from_points(x, x ** -1.0), (x[0], x[-1]))


@pytest.mark.parametrize("gamma", [1.5, 2.0])
def test_pareto_recovery(gamma):
    v = gen_inverse_cdf_samples("pareto", 10**5, 1, gamma=gamma)
    c = empirical_ccdf(v)
    assert fit_power_tail(c, select_tail_region(c, "quantile", 0.9)).exponent == pytest.approx(gamma, abs=0.1)


@pytest.mark.parametrize("beta", [0.3, 0.5])
def test_weibull_recovery(beta):
    v = gen_inverse_cdf_samples("weibull", 10**5, 2, beta=beta)
    c = empirical_ccdf(v)
    fit = fit_stretched_exponential(c, select_tail_region(c, "quantile", 0.9))
    assert fit.exponent == pytest.approx(beta, abs=0.05)
    assert fit.conforming


def test_quantile_region_size():
    v = np.random.default_rng(0).exponential(size=1000)
    c = empirical_ccdf(v)
    lo, hi = select_tail_region(c, "quantile", 0.9)
    assert 95 <= np.sum((c.x >= lo) & (c.x <= hi)) <= 105
    assert hi == c.x[-1]


def test_fixed_region():
    c = empirical_ccdf(np.random.default_rng(0).exponential(size=1000))
    lo, hi = select_tail_region(c, "fixed", x_lo=1.0, x_hi=3.0)
    assert 1.0 <= lo < hi <= 3.0
    with pytest.raises(ValueError):
        select_tail_region(c, "fixed", x_lo=c.x[-1] * 2, x_hi=c.x[-1] * 3)
    with pytest.raises(ValueError):
        select_tail_region(c, "fixed", x_lo=3.0, x_hi=1.0)
    with pytest.raises(ValueError):
        select_tail_region(c, "nope")


def test_quantile_stability():
    v = gen_inverse_cdf_samples("pareto", 10**5, 5, gamma=1.5)
    c = empirical_ccdf(v)
    a = fit_power_tail(c, select_tail_region(c, "quantile", 0.90))
    b = fit_power_tail(c, select_tail_region(c, "quantile", 0.95))
    combined = np.hypot(a.std_error, b.std_error)
    assert abs(a.exponent - b.exponent) <= max(combined, 0.05)


def test_models_comparable():
    x = np.logspace(0, 2, 40)
    c = ccdf_from_points(x, x ** -2.0 * np.exp(0.01 * np.sin(x)))
    a = fit_power_tail(c, (x[0], x[-1]))
    assert models_comparable(a, a)
    b = fit_stretched_exponential(c, (x[0], x[-1]))
    assert models_comparable(a, b) == (max(a.goodness, b.goodness) / min(a.goodness, b.goodness) <= 1.5)


def test_hill_cross_check():
    v = gen_inverse_cdf_samples("pareto", 10**5, 9, gamma=2.0)
    g, se = hill_estimator(v, 2000)
    assert g == pytest.approx(2.0, abs=4 * se)
    with pytest.raises(ValueError):
        hill_estimator(v, 0)


def test_ccdf_from_points_validates():
    with pytest.raises(ValueError):
        ccdf_from_points([1, 1, 2], [1, 0.5, 0.2])
    with pytest.raises(ValueError):
        ccdf_from_points([1, 2, 3], [0.2, 0.5, 0.1])
