"""ARIMA(p, d, q) estimation, selection, residual checks and forecasting.

Estimation is conditional least squares on the d-times differenced series
``w``.  Residuals are produced for every observation by running

    e_t = (w_t - mu) - sum_i phi_i (w_{t-i} - mu) - sum_j theta_j e_{t-j}

with pre-sample deviations and errors set to zero, so a series of length n
always yields n residuals.  AR and MA polynomials are parameterised through
partial autocorrelations squashed by ``tanh``; an AR estimate pushed against
the unit circle is reported with ``converged=False`` and ``at_boundary=True``.

Reported quantities follow one convention throughout:

* ``sigma2 = SSE / (n - k)`` where ``k = p + q + [constant]``;
* ``loglik = -n/2 * (log(2*pi*SSE/n) + 1)`` (Gaussian, ML variance);
* ``aic = -2*loglik + 2*k``.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal
from scipy.optimize import least_squares
from scipy.stats import chi2
from sklearn.base import BaseEstimator

from ._validation import check_int, check_is_fitted
from .exceptions import (
    AllFitsFailed,
    DegenerateVariance,
    InsufficientLag,
    TooShort,
    ValidationError,
    ZeroActual,
)
from .ts_core import Series, as_series, difference, sample_acf

logger = logging.getLogger(__name__)

Z95 = 1.96
BOUNDARY_PACF = 1.0 - 1e-6


@dataclass(frozen=True)
class ArimaSpec:
    p: int = 0
    d: int = 1
    q: int = 0
    with_constant: bool = True

    def __post_init__(self):
        for name in ("p", "d", "q"):
            check_int(getattr(self, name), name, minimum=0)

    @property
    def n_params(self) -> int:
        return self.p + self.q + int(self.with_constant)

    @property
    def order(self) -> tuple[int, int, int]:
        return (self.p, self.d, self.q)

    def __str__(self):
        return f"({self.p},{self.d},{self.q})"


@dataclass(frozen=True)
class FittedModel:
    spec: ArimaSpec
    ar: np.ndarray
    ma: np.ndarray
    constant: float
    sigma2: float
    loglik: float
    aic: float
    residuals: Series
    converged: bool
    iterations: int
    series: Series = field(repr=False)
    at_boundary: bool = False

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def nobs(self) -> int:
        return len(self.residuals)

    def ar_roots(self) -> np.ndarray:
        if self.ar.size == 0:
            return np.array([])
        return np.roots(np.r_[-self.ar[::-1], 1.0])

    def pi_weights(self, n: int) -> np.ndarray:
        """Coefficients of the residual filter on the undifferenced series."""
        ar_poly = np.r_[1.0, -self.ar]
        for _ in range(self.spec.d):
            ar_poly = np.convolve(ar_poly, [1.0, -1.0])
        impulse = np.zeros(n)
        impulse[0] = 1.0
        return signal.lfilter(ar_poly, np.r_[1.0, self.ma], impulse)

    def psi_weights(self, n: int) -> np.ndarray:
        """MA(infinity) weights of the integrated model, psi_0 = 1."""
        ar_poly = np.r_[1.0, -self.ar]
        for _ in range(self.spec.d):
            ar_poly = np.convolve(ar_poly, [1.0, -1.0])
        impulse = np.zeros(n)
        impulse[0] = 1.0
        return signal.lfilter(np.r_[1.0, self.ma], ar_poly, impulse)


@dataclass(frozen=True)
class ForecastEntry:
    h: int
    year: int
    point: float
    stderr: float
    lo95: float
    hi95: float


@dataclass(frozen=True)
class ForecastResult:
    entries: tuple

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def points(self) -> np.ndarray:
        return np.array([e.point for e in self.entries])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([e.stderr for e in self.entries])

    def at_year(self, year: int) -> ForecastEntry:
        for e in self.entries:
            if e.year == year:
                return e
        raise KeyError(year)


@dataclass(frozen=True)
class DiagnosticsResult:
    to_lag: int
    chi_square: float
    df: int
    p_value: float
    autocorrelations: np.ndarray = field(repr=False, default=None)


# --- polynomial parameterisation ------------------------------------------

def pacf_to_coefs(r: np.ndarray) -> np.ndarray:
    """Partial autocorrelations in (-1, 1) -> stationary AR coefficients."""
    coefs = np.zeros(0)
    for k, rk in enumerate(np.asarray(r, dtype=float)):
        coefs = np.r_[coefs - rk * coefs[::-1], rk] if k else np.array([rk])
    return coefs


def coefs_to_pacf(coefs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pacf_to_coefs` (Durbin-Levinson step-down)."""
    a = np.asarray(coefs, dtype=float).copy()
    out = np.zeros(a.size)
    for k in range(a.size - 1, -1, -1):
        rk = a[k]
        out[k] = rk
        if k:
            if abs(rk) >= 1.0:
                raise ValueError("polynomial is not stationary")
            a = (a[:k] + rk * a[:k][::-1]) / (1.0 - rk * rk)
    return out


def reflect_roots(coefs: np.ndarray, shrink: float = 0.98) -> np.ndarray:
    """Move roots of 1 - sum c_i B^i inside the unit circle out, by reflection.

    Roots that end up within ``1/shrink`` of the circle are pushed out to
    that radius so the result is strictly admissible.
    """
    coefs = np.asarray(coefs, dtype=float)
    if coefs.size == 0:
        return coefs
    roots = np.roots(np.r_[-coefs[::-1], 1.0])
    mod = np.abs(roots)
    roots = np.where(mod < 1.0, 1.0 / np.conj(roots), roots)
    mod = np.abs(roots)
    roots = np.where(mod < 1.0 / shrink, roots / mod / shrink, roots)
    poly = np.real(np.poly(1.0 / roots))  # monic in B with constant 1
    return -poly[1:]


def _ar_params(u: np.ndarray) -> np.ndarray:
    return pacf_to_coefs(np.tanh(u))


def _ma_params(u: np.ndarray) -> np.ndarray:
    return -pacf_to_coefs(np.tanh(u))


def _to_unconstrained(coefs: np.ndarray) -> np.ndarray:
    r = np.clip(coefs_to_pacf(coefs), -0.999, 0.999)
    return np.arctanh(r)


# --- residual recursion -------------------------------------------------------

def arma_residuals(w: np.ndarray, mu: float, ar: np.ndarray, ma: np.ndarray) -> np.ndarray:
    """CLS residuals with zero pre-sample values (n residuals for n points)."""
    return signal.lfilter(np.r_[1.0, -np.asarray(ar)], np.r_[1.0, np.asarray(ma)], w - mu)


def _hannan_rissanen(w: np.ndarray, p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    n = w.size
    x = w - w.mean()
    ar, ma = np.zeros(p), np.zeros(q)
    if q == 0:
        if p and n > 2 * p + 1:
            X = np.column_stack([x[p - i - 1:n - i - 1] for i in range(p)])
            ar = np.linalg.lstsq(X, x[p:], rcond=None)[0]
        return ar, ma
    m = min(max(p + q, int(np.ceil(np.log(n) ** 2))), (n - 1) // 3)
    if m < 1 or n - m <= p + q + 2:
        return ar, ma
    X = np.column_stack([x[m - i - 1:n - i - 1] for i in range(m)])
    long_ar = np.linalg.lstsq(X, x[m:], rcond=None)[0]
    eps = np.r_[np.zeros(m), x[m:] - X @ long_ar]
    start = m + q
    if n - start <= p + q + 1:
        return ar, ma
    t = np.arange(max(start, p), n)
    cols = [x[t - i - 1] for i in range(p)] + [eps[t - j - 1] for j in range(q)]
    beta = np.linalg.lstsq(np.column_stack(cols), x[t], rcond=None)[0]
    return beta[:p], beta[p:]


def _information(sse: float, n: int, k: int) -> tuple[float, float, float]:
    sigma2 = sse / (n - k)
    loglik = -0.5 * n * (math.log(2.0 * math.pi * sse / n) + 1.0)
    return sigma2, loglik, -2.0 * loglik + 2.0 * k


def fit(series, spec: ArimaSpec, max_iter: int = 200, xtol: float = 1e-8) -> FittedModel:
    """Conditional least squares fit of ``spec`` to ``series``."""
    s = as_series(series)
    if not isinstance(spec, ArimaSpec):
        spec = ArimaSpec(*spec)
    if len(s) <= spec.d:
        raise TooShort(f"series of length {len(s)} cannot be differenced {spec.d} times")
    ws = difference(s, spec.d)
    w = ws.values
    n, k = w.size, spec.n_params
    if spec.p + spec.q + 1 >= n or n - k < 1:
        raise TooShort(f"ARIMA{spec} needs more than {spec.p + spec.q + 1} points after differencing, got {n}")

    if spec.p == 0 and spec.q == 0:
        mu = float(w.mean()) if spec.with_constant else 0.0
        resid = w - mu
        sse = float(resid @ resid)
        if sse <= 0.0:
            raise DegenerateVariance("residual sum of squares is zero")
        sigma2, loglik, aic = _information(sse, n, k)
        return FittedModel(spec, np.zeros(0), np.zeros(0), mu, sigma2, loglik, aic,
                           Series(resid, ws.start_year), True, 0, s)

    p, q, c = spec.p, spec.q, int(spec.with_constant)
    # work on a unit-scale copy so tolerances do not depend on the data's units
    scale = float(np.std(w)) or float(np.max(np.abs(w))) or 1.0
    w = w / scale

    def unpack(theta):
        mu = theta[0] if c else 0.0
        return mu, _ar_params(theta[c:c + p]), _ma_params(theta[c + p:])

    def objective(theta):
        mu, ar, ma = unpack(theta)
        return arma_residuals(w, mu, ar, ma)

    starts = []
    ar0, ma0 = _hannan_rissanen(w, p, q)
    ar0, ma0 = reflect_roots(ar0), -reflect_roots(-ma0)
    mu0 = [float(w.mean())] if c else []
    for ar_s, ma_s in ((ar0, ma0), (np.zeros(p), np.zeros(q))):
        try:
            starts.append(np.r_[mu0, _to_unconstrained(ar_s), _to_unconstrained(-ma_s)])
        except ValueError:
            logger.debug("discarding inadmissible start for ARIMA%s", spec)

    best = None
    for x0 in starts:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = least_squares(objective, x0, method="lm", xtol=xtol, ftol=1e-12,
                                gtol=1e-12, max_nfev=max_iter * (x0.size + 1))
        if best is None or res.cost < best.cost - 1e-12 * max(1.0, best.cost):
            best = res
    mu, ar, ma = unpack(best.x)
    mu *= scale
    resid = best.fun * scale
    sse = float(resid @ resid)
    if sse <= 0.0:
        raise DegenerateVariance("residual sum of squares is zero")
    pacf_ar = np.tanh(best.x[c:c + p])
    pacf_ma = np.tanh(best.x[c + p:])
    at_boundary = bool(np.any(np.abs(pacf_ar) > BOUNDARY_PACF) or np.any(np.abs(pacf_ma) > BOUNDARY_PACF))
    converged = bool(best.status > 0) and not at_boundary
    if not converged:
        logger.info("ARIMA%s did not converge (status=%s, boundary=%s)", spec, best.status, at_boundary)
    sigma2, loglik, aic = _information(sse, n, k)
    return FittedModel(spec, ar, ma, float(mu), sigma2, loglik, aic,
                       Series(resid, ws.start_year), converged, int(best.nfev), s, at_boundary)


def select_best(series, d: int, candidates: Sequence, with_constant: bool = True,
                max_iter: int = 200) -> tuple[FittedModel, list[FittedModel]]:
    """Fit every (p, q) candidate and return the minimum-AIC model and all fits.

    Ties go to the smaller p + q, then the smaller q.  Fits that are flagged
    as non-converged still compete.
    """
    if not candidates:
        raise ValidationError("no candidate orders supplied")
    seen, fits = set(), []
    for cand in candidates:
        p, q = (cand.p, cand.q) if hasattr(cand, "p") else tuple(cand)
        if (p, q) in seen:
            continue
        seen.add((p, q))
        try:
            fits.append(fit(series, ArimaSpec(p, d, q, with_constant), max_iter=max_iter))
        except (TooShort, DegenerateVariance, np.linalg.LinAlgError) as exc:
            logger.warning("ARIMA(%d,%d,%d) skipped: %s", p, d, q, exc)
    if not fits:
        raise AllFitsFailed(f"none of {sorted(seen)} could be fitted")
    best = min(fits, key=lambda m: (round(m.aic, 10), m.spec.p + m.spec.q, m.spec.q))
    return best, fits


def ljung_box(model: FittedModel, to_lag: int = 6) -> DiagnosticsResult:
    """Portmanteau check on the model residuals.

    Residual autocorrelations are taken about zero (no re-centring), and the
    degrees of freedom are ``to_lag - p - q``.
    """
    to_lag = check_int(to_lag, "to_lag", minimum=1)
    e = model.residuals.values
    n = e.size
    dof = to_lag - model.spec.p - model.spec.q
    if dof < 1:
        raise InsufficientLag(f"to_lag={to_lag} must exceed p+q={model.spec.p + model.spec.q}")
    if n <= to_lag:
        raise InsufficientLag(f"{n} residuals cannot support lag {to_lag}")
    r = sample_acf(Series(e), to_lag, demean=False)
    lags = np.arange(1, to_lag + 1)
    stat = float(n * (n + 2) * np.sum(r**2 / (n - lags)))
    return DiagnosticsResult(to_lag, stat, dof, float(chi2.sf(stat, dof)), r)


def forecast(model: FittedModel, horizon: int = 1) -> ForecastResult:
    """Point forecasts, standard errors and 95% limits for steps 1..horizon."""
    horizon = check_int(horizon, "horizon", minimum=1)
    spec = model.spec
    w = difference(model.series, spec.d).values
    e = model.residuals.values
    mu = model.constant
    dev = list(w - mu)
    err = list(e)
    for _ in range(horizon):
        nxt = sum(model.ar[i] * dev[-i - 1] for i in range(spec.p) if len(dev) > i)
        nxt += sum(model.ma[j] * err[-j - 1] for j in range(spec.q) if len(err) > j)
        dev.append(nxt)
        err.append(0.0)
    w_fc = np.array(dev[len(w):]) + mu

    # undo differencing, innermost level first
    levels = [model.series.values]
    for _ in range(spec.d):
        levels.append(np.diff(levels[-1]))
    path = w_fc
    for lvl in range(spec.d - 1, -1, -1):
        path = levels[lvl][-1] + np.cumsum(path)

    psi = model.psi_weights(horizon)
    se = model.sigma * np.sqrt(np.cumsum(psi**2))
    end = model.series.end_year
    return ForecastResult(tuple(
        ForecastEntry(h + 1, end + h + 1, float(path[h]), float(se[h]),
                      float(path[h] - Z95 * se[h]), float(path[h] + Z95 * se[h]))
        for h in range(horizon)))


def percent_forecast_error(actual: float, forecast_value: float) -> float:
    if actual == 0:
        raise ZeroActual("percent error is undefined for a zero actual")
    return 100.0 * abs(actual - forecast_value) / abs(actual)


class ARIMA(BaseEstimator):
    """Scikit-learn style wrapper around :func:`fit` and :func:`forecast`.

    Parameters
    ----------
    order : tuple of int
        (p, d, q).
    with_constant : bool
        Mean (d = 0) or drift (d >= 1) term.
    max_iter : int
        Iteration cap for the least-squares optimiser.

    Attributes
    ----------
    model_ : FittedModel
    ar_, ma_ : ndarray
    constant_, sigma2_, aic_ : float
    """

    def __init__(self, order=(0, 1, 0), with_constant=True, max_iter=200):
        self.order = order
        self.with_constant = with_constant
        self.max_iter = max_iter

    def fit(self, X, y=None, start_year=None):
        series = as_series(X) if start_year is None else Series(np.asarray(X, dtype=float), start_year)
        self.model_ = fit(series, ArimaSpec(*self.order, self.with_constant), max_iter=self.max_iter)
        m = self.model_
        self.ar_, self.ma_ = m.ar, m.ma
        self.constant_, self.sigma2_, self.aic_ = m.constant, m.sigma2, m.aic
        self.converged_ = m.converged
        return self

    def forecast(self, horizon=1) -> ForecastResult:
        check_is_fitted(self, "model_")
        return forecast(self.model_, horizon)

    def predict(self, horizon=1) -> np.ndarray:
        return self.forecast(horizon).points

    def diagnose(self, to_lag=6) -> DiagnosticsResult:
        check_is_fitted(self, "model_")
        return ljung_box(self.model_, to_lag)
