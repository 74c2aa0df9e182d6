"""Single-mean augmented Dickey-Fuller test and the differencing loop.

p-values come from a finite-sample response surface: for each probability
level p, the p-quantile of tau under the unit-root null is modelled as
``b0 + b1/T + b2/T**2 + b3/T**3`` with T the number of regression rows.
The coefficients live in ``data/df_tau_surface.csv`` and are regenerated by
``tools/build_df_surface.py``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.stats import norm
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_int, check_is_fitted, check_probability
from .exceptions import StillNonStationary, TooShort
from .ts_core import Series, as_series, difference, ols

SURFACE_VERSION = "df-c-2017.1"


@dataclass(frozen=True)
class AdfResult:
    tau: float
    p_value: float
    lag_order: int
    stationary: bool
    nobs: int
    alpha: float = 0.05
    rho: float = float("nan")


@lru_cache(maxsize=1)
def _surface() -> tuple[np.ndarray, np.ndarray]:
    text = resources.files("tradecast.data").joinpath("df_tau_surface.csv").read_text()
    rows = [ln.split(",") for ln in text.splitlines()
            if ln and not ln.startswith("#") and not ln.startswith("prob")]
    table = np.array(rows, dtype=float)
    return table[:, 0], table[:, 1:]


def tau_quantiles(nobs: int) -> tuple[np.ndarray, np.ndarray]:
    """(probabilities, tau quantiles) of the null distribution at ``nobs`` rows."""
    probs, coefs = _surface()
    inv = 1.0 / float(nobs)
    q = coefs @ np.array([1.0, inv, inv**2, inv**3])
    return probs, np.maximum.accumulate(q)


def tau_pvalue(tau: float, nobs: int) -> float:
    """P(tau_null <= tau) for a single-mean Dickey-Fuller regression with ``nobs`` rows.

    Interpolates linearly on the normal-score scale; beyond the tabulated
    range the end segments are extended.
    """
    probs, q = tau_quantiles(nobs)
    z = norm.ppf(probs)
    if tau <= q[0]:
        slope = (z[1] - z[0]) / (q[1] - q[0])
        zt = z[0] + slope * (tau - q[0])
    elif tau >= q[-1]:
        slope = (z[-1] - z[-2]) / (q[-1] - q[-2])
        zt = z[-1] + slope * (tau - q[-1])
    else:
        zt = np.interp(tau, q, z)
    return float(norm.cdf(zt))


def tau_critical(alpha: float, nobs: int) -> float:
    probs, q = tau_quantiles(nobs)
    return float(np.interp(norm.ppf(alpha), norm.ppf(probs), q))


def adf_test(series, lag_order: int = 0, alpha: float = 0.05) -> AdfResult:
    """Fit dy_t = a + rho*y_{t-1} + sum_i phi_i*dy_{t-i} and test rho = 0."""
    s = as_series(series)
    lag_order = check_int(lag_order, "lag_order", minimum=0)
    alpha = check_probability(alpha, "alpha")
    y = s.values
    if y.size < lag_order + 10:
        raise TooShort(f"ADF with {lag_order} lags needs {lag_order + 10} observations, got {y.size}")
    dy = np.diff(y)
    rows = np.arange(lag_order, dy.size)
    cols = [np.ones(rows.size), y[rows]]
    cols += [dy[rows - i] for i in range(1, lag_order + 1)]
    fit = ols(np.column_stack(cols), dy[rows])
    tau = float(fit.coefficients[1] / fit.stderr[1])
    p = tau_pvalue(tau, rows.size)
    return AdfResult(tau, p, lag_order, p <= alpha, rows.size, alpha, float(fit.coefficients[1]))


def difference_until_stationary(series, alpha: float = 0.05, max_d: int = 2,
                                lag_order: int = 0) -> tuple[int, list[AdfResult]]:
    """Smallest d <= max_d whose d-times differenced series rejects a unit root."""
    s = as_series(series)
    max_d = check_int(max_d, "max_d", minimum=1)
    trail = []
    for d in range(max_d + 1):
        res = adf_test(difference(s, d), lag_order, alpha)
        trail.append(res)
        if res.stationary:
            return d, trail
    raise StillNonStationary(max_d)


class UnitRootDifferencer(TransformerMixin, BaseEstimator):
    """Choose the differencing order by repeated ADF tests, then difference.

    Attributes
    ----------
    d_ : int
    trail_ : list of AdfResult
    """

    def __init__(self, alpha=0.05, max_d=2, lag_order=0):
        self.alpha = alpha
        self.max_d = max_d
        self.lag_order = lag_order

    def fit(self, X, y=None):
        self.d_, self.trail_ = difference_until_stationary(
            X, alpha=self.alpha, max_d=self.max_d, lag_order=self.lag_order)
        return self

    def transform(self, X) -> Series:
        check_is_fitted(self, "trail_")
        return difference(X, self.d_)
