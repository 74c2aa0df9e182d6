"""Additive outliers (AO) and permanent level shifts (LS).

An AO is a one-period pulse and an LS a step that persists from its onset.
Passing either indicator through the fitted model's residual filter gives
the signature it leaves in the residuals; regressing the current residuals
on each signature gives an effect estimate and a t-statistic.  The largest
|t| is accepted if it clears ``critical``, its effect is removed from the
residuals, and the search repeats with the model parameters held fixed.

The default t-statistic is the exact regression t of the single added
regressor: the residual variance is re-estimated with the candidate effect
removed and one extra degree of freedom used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal
from sklearn.base import BaseEstimator

from ._validation import check_int, check_is_fitted
from .arima import ArimaSpec, FittedModel, arma_residuals, fit
from .exceptions import EmptyInput, ValidationError
from .ts_core import Series, as_series, difference

AO, LS = "AO", "LS"
DEFAULT_CRITICAL = 2.6
MAD_MIN_LENGTH = 15


@dataclass(frozen=True)
class OutlierEvent:
    kind: str
    year: int
    magnitude: float
    t_stat: float
    iteration: int
    index: int = -1


def classify_max(t_ao, t_ls) -> tuple[str, int, float]:
    """Kind, index and value of the largest |t| across both vectors.

    At equal |t| on the same index the level shift wins.
    """
    t_ao = np.nan_to_num(np.asarray(t_ao, dtype=float))
    t_ls = np.nan_to_num(np.asarray(t_ls, dtype=float))
    if t_ao.size == 0 or t_ao.size != t_ls.size:
        raise EmptyInput("t vectors must be non-empty and of equal length")
    i_ao = int(np.argmax(np.abs(t_ao)))
    i_ls = int(np.argmax(np.abs(t_ls)))
    a, b = abs(t_ao[i_ao]), abs(t_ls[i_ls])
    if b > a or (b == a and b > 0 and i_ls <= i_ao):
        return LS, i_ls, float(t_ls[i_ls])
    return AO, i_ao, float(t_ao[i_ao])


def signatures(model: FittedModel, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Residual responses to an AO / LS at each of ``n`` positions.

    Returns two (n, n - d) arrays; row t is the signature of an event at t.
    LS at t = 0 is confounded with the level and left as zeros.
    """
    d = model.spec.d
    ar_poly = np.r_[1.0, -model.ar]
    ma_poly = np.r_[1.0, model.ma]
    eye = np.eye(n)
    steps = np.tril(np.ones((n, n))).T   # row t: ones from t onwards
    steps[0] = 0.0
    ao = signal.lfilter(ar_poly, ma_poly, np.diff(eye, n=d, axis=1), axis=1)
    ls = signal.lfilter(ar_poly, ma_poly, np.diff(steps, n=d, axis=1), axis=1)
    return ao, ls


def _t_stats(resid, sig, dof, mode, model_sigma):
    ss = np.einsum("ij,ij->i", sig, sig)
    ok = ss > 1e-10 * max(1.0, ss.max(initial=0.0))
    omega = np.where(ok, sig @ resid / np.where(ok, ss, 1.0), 0.0)
    if mode == "regression":
        sse = resid @ resid
        s2 = np.maximum(sse - omega**2 * ss, 0.0) / dof
        scale = np.sqrt(s2)
    elif mode == "model":
        scale = np.full(ss.shape, model_sigma)
    else:
        if resid.size >= MAD_MIN_LENGTH:
            med = np.median(resid)
            robust = 1.4826 * np.median(np.abs(resid - med))
        else:
            robust = model_sigma
        scale = np.full(ss.shape, robust)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(ok & (scale > 0), omega * np.sqrt(ss) / scale, 0.0)
    return t, omega


def event_limit(n: int, max_events: int, max_share: float) -> int:
    return min(max_events, max(1, math.ceil(max_share * n - 1e-9)))


def detect(model: FittedModel, series=None, critical: float = DEFAULT_CRITICAL,
           max_events: int = 5, max_share: float = 0.02, sigma: str = "regression",
           refit: bool = True) -> list[OutlierEvent]:
    """Iterative AO / LS search on ``series`` under ``model``'s parameters.

    Parameters
    ----------
    model : FittedModel
    series : Series, optional
        Defaults to the series the model was fitted on.
    critical : float
        Minimum |t| for an event to be accepted.
    max_events : int
        Hard cap on the number of events.
    max_share : float
        Events are further capped at ``ceil(max_share * n)`` (at least one),
        which keeps short annual series to a single event.
    sigma : {"regression", "model", "mad"}
        Scale used in the t-statistics.
    refit : bool
        Re-estimate the ARIMA parameters on the adjusted series after each
        accepted event.  A large level shift otherwise leaves the fitted AR
        part near a unit root and the next round finds spurious pulses.
    """
    if critical <= 0:
        raise ValidationError("critical must be positive")
    check_int(max_events, "max_events", minimum=1)
    if sigma not in ("regression", "model", "mad"):
        raise ValidationError(f"unknown sigma mode {sigma!r}")
    s = model.series if series is None else as_series(series)
    n = len(s)
    w = difference(s, model.spec.d).values
    resid = arma_residuals(w, model.constant, model.ar, model.ma)
    if resid @ resid <= 1e-20 * max(1.0, w @ w):
        return []
    sig_ao, sig_ls = signatures(model, n)
    k = model.spec.n_params
    limit = event_limit(n, max_events, max_share)
    events: list[OutlierEvent] = []
    while len(events) < limit:
        dof = resid.size - k - len(events) - 1
        if dof < 1:
            break
        t_ao, w_ao = _t_stats(resid, sig_ao, dof, sigma, model.sigma)
        t_ls, w_ls = _t_stats(resid, sig_ls, dof, sigma, model.sigma)
        kind, idx, t = classify_max(t_ao, t_ls)
        if abs(t) < critical:
            break
        omega = (w_ls if kind == LS else w_ao)[idx]
        sig = (sig_ls if kind == LS else sig_ao)[idx]
        resid = resid - omega * sig
        events.append(OutlierEvent(kind, s.start_year + idx, float(omega), float(t), len(events) + 1, idx))
        if refit and len(events) < limit:
            try:
                model = fit(remove_effects(s, events), model.spec)
            except (ArithmeticError, ValueError, np.linalg.LinAlgError):
                continue
            resid = arma_residuals(difference(remove_effects(s, events), model.spec.d).values,
                                   model.constant, model.ar, model.ma)
            sig_ao, sig_ls = signatures(model, n)
    return events


def remove_effects(series, events) -> Series:
    """Subtract the estimated AO / LS effects from ``series``."""
    s = as_series(series)
    y = s.values.copy()
    for ev in events:
        i = ev.year - s.start_year
        if ev.kind == AO:
            y[i] -= ev.magnitude
        else:
            y[i:] -= ev.magnitude
    return Series(y, s.start_year)


class OutlierDetector(BaseEstimator):
    """Estimator front-end for :func:`detect`.

    ``fit`` accepts either a series (an ARIMA of ``order`` is fitted first)
    or an already fitted model through the ``model`` keyword.
    """

    def __init__(self, order=(0, 1, 0), with_constant=True, critical=DEFAULT_CRITICAL,
                 max_events=5, max_share=0.02, sigma="regression", refit=True):
        self.order = order
        self.with_constant = with_constant
        self.critical = critical
        self.max_events = max_events
        self.max_share = max_share
        self.sigma = sigma
        self.refit = refit

    def fit(self, X=None, y=None, model=None):
        if model is None:
            model = fit(as_series(X), ArimaSpec(*self.order, self.with_constant))
        self.model_ = model
        self.events_ = detect(model, X if X is not None else None, self.critical,
                              self.max_events, self.max_share, self.sigma, self.refit)
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return remove_effects(X, self.events_)
