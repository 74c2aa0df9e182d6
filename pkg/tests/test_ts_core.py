import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose, assert_array_equal

from tradecast.exceptions import ConstantSeries, RankDeficient, TooShort, ValidationError
from tradecast.ts_core import Series, as_series, difference, ols, sample_acf

from oracles import US_NRCA, acf_brute, ols_normal_equations

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_series_rejects_non_finite():
    with pytest.raises(ValidationError):
        Series(np.array([1.0, np.nan]), 2000)


def test_series_years_and_window():
    s = Series(np.arange(5.0), 2000)
    assert_array_equal(s.years, np.arange(2000, 2005))
    w = s.window(2001, 2003)
    assert w.start_year == 2001
    assert_array_equal(w.values, [1.0, 2.0, 3.0])


def test_difference_example():
    d = difference(Series(np.array([1.0, 3.0, 6.0, 10.0]), 2000), 1)
    assert_array_equal(d.values, [2.0, 3.0, 4.0])
    assert d.start_year == 2001


def test_difference_zero_is_identity():
    s = Series(np.array([5.0, -1.0, 2.5]), 1990)
    d = difference(s, 0)
    assert d.start_year == s.start_year
    assert_array_equal(d.values, s.values)


def test_difference_6309_mean():
    # oracle: telescoping sum of the first differences
    expected = (US_NRCA["6309"][19] - US_NRCA["6309"][0]) / 19
    d = difference(as_series(US_NRCA["6309"][:20], 1996), 1)
    assert len(d) == 19
    assert_allclose(d.values.mean(), expected, rtol=1e-12)
    assert_allclose(d.values.mean(), -0.3653, atol=5e-5)


def test_difference_too_short():
    with pytest.raises(TooShort):
        difference(Series(np.array([1.0, 2.0]), 2000), 2)


@given(arrays(float, st.integers(3, 30), elements=finite))
def test_double_difference_composes(x):
    s = Series(x, 0)
    assert_allclose(difference(difference(s, 1), 1).values, difference(s, 2).values,
                    rtol=1e-12, atol=1e-9)


def test_acf_linear_series():
    x = np.arange(1.0, 21.0)
    assert_allclose(sample_acf(Series(x), 1)[0], acf_brute(x, 1), rtol=1e-12)
    assert_allclose(sample_acf(Series(x), 1)[0], 0.85, atol=1e-12)


def test_acf_alternating_series():
    x = np.tile([1.0, -1.0], 10)
    r1 = sample_acf(Series(x), 1)[0]
    assert_allclose(r1, acf_brute(x, 1), rtol=1e-12)
    assert_allclose(r1, -0.95, atol=1e-12)


def test_acf_constant_series():
    with pytest.raises(ConstantSeries):
        sample_acf(Series(np.ones(10)), 2)


@settings(max_examples=50)
@given(arrays(float, st.integers(5, 40), elements=finite))
def test_acf_bounded(x):
    if np.ptp(x) < 1e-6:
        return
    r = sample_acf(Series(x), len(x) - 1)
    assert np.all(np.abs(r) <= 1 + 1e-12)


def test_acf_white_noise_band():
    x = np.random.default_rng(11).standard_normal(500)
    r = sample_acf(Series(x), 20)
    assert np.mean(np.abs(r) < 2 / np.sqrt(500)) >= 0.9


def test_ols_intercept_only_is_mean():
    f = ols(np.ones((3, 1)), np.array([2.0, 4.0, 6.0]))
    assert_allclose(f.coefficients, [4.0])


def test_ols_exact_line():
    x = np.arange(1.0, 6.0)
    f = ols(np.column_stack([np.ones(5), x]), 2 * x + 1)
    assert_allclose(f.coefficients, [1.0, 2.0], atol=1e-12)
    assert_allclose(f.residuals, 0.0, atol=1e-12)


def test_ols_matches_normal_equations():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((20, 3))
    y = X @ [1.0, -2.0, 0.5] + rng.standard_normal(20)
    beta, resid, se = ols_normal_equations(X, y)
    f = ols(X, y)
    assert_allclose(f.coefficients, beta, atol=1e-9)
    assert_allclose(f.residuals, resid, atol=1e-9)
    assert_allclose(f.stderr, se, atol=1e-9)
    assert_allclose(f.sigma2, resid @ resid / 17, rtol=1e-9)


def test_ols_rank_deficient():
    X = np.column_stack([np.ones(6), np.arange(6.0), 2 * np.arange(6.0)])
    with pytest.raises(RankDeficient):
        ols(X, np.arange(6.0))


def test_ols_too_short():
    with pytest.raises(TooShort):
        ols(np.ones((2, 2)), np.ones(2))


@settings(max_examples=50)
@given(st.integers(0, 10_000), st.integers(8, 40), st.integers(1, 4))
def test_ols_residuals_orthogonal(seed, n, k):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, k))
    y = rng.standard_normal(n) * 10
    f = ols(X, y)
    assert np.max(np.abs(X.T @ f.residuals)) < 1e-8 * np.linalg.norm(y)
