"""Series primitives: differencing, autocorrelation and least squares."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import check_1d, check_int
from .exceptions import ConstantSeries, RankDeficient, TooShort, ValidationError


@dataclass(frozen=True)
class Series:
    """Equally spaced annual observations starting at ``start_year``."""

    values: np.ndarray
    start_year: int = 0

    def __post_init__(self):
        arr = check_1d(self.values, "values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "start_year", int(self.start_year))

    def __len__(self):
        return self.values.size

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.start_year + len(self))

    @property
    def end_year(self) -> int:
        return self.start_year + len(self) - 1

    def window(self, first: int, last: int) -> "Series":
        """Sub-series covering ``first..last`` inclusive."""
        if first < self.start_year or last > self.end_year or last < first:
            raise ValidationError(
                f"window {first}-{last} outside {self.start_year}-{self.end_year}"
            )
        lo = first - self.start_year
        return Series(self.values[lo:lo + last - first + 1], first)


def as_series(obj, start_year=0) -> Series:
    if isinstance(obj, Series):
        return obj
    if hasattr(obj, "years") and hasattr(obj, "values"):
        years = np.asarray(obj.years)
        return Series(np.asarray(obj.values, dtype=float), int(years[0]) if years.size else 0)
    return Series(np.asarray(obj, dtype=float), start_year)


def difference(series, d: int) -> Series:
    """Apply ``d`` first differences; ``start_year`` advances by ``d``."""
    s = as_series(series)
    d = check_int(d, "d", minimum=0)
    if len(s) <= d:
        raise TooShort(f"cannot difference a length-{len(s)} series {d} times")
    return Series(np.diff(s.values, n=d) if d else s.values.copy(), s.start_year + d)


def sample_acf(series, max_lag: int, demean: bool = True) -> np.ndarray:
    """Autocorrelations r_1..r_max_lag with the lag-0 sum as denominator.

    ``demean=False`` uses raw cross products, which is the convention for
    model residuals that are zero-mean by construction.
    """
    x = as_series(series).values
    max_lag = check_int(max_lag, "max_lag", minimum=1)
    if max_lag >= x.size:
        raise TooShort(f"max_lag={max_lag} needs more than {x.size} observations")
    if demean:
        x = x - x.mean()
    denom = x @ x
    if denom <= 0.0:
        raise ConstantSeries("series has zero variance")
    return np.array([x[:-k] @ x[k:] / denom for k in range(1, max_lag + 1)])


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    stderr: np.ndarray
    sigma2: float
    rank: int

    @property
    def tvalues(self) -> np.ndarray:
        return self.coefficients / self.stderr


def ols(X, y, rank_tol: float = 1e-10) -> OlsFit:
    """Least squares via column-pivoted QR.

    Raises ``RankDeficient`` when any pivot of R falls below
    ``rank_tol * |R[0, 0]|``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = check_1d(y, "y")
    n, k = X.shape
    if n != y.size:
        raise ValidationError(f"X has {n} rows but y has {y.size}")
    if n <= k:
        raise TooShort(f"need more rows than columns, got {n}x{k}")
    q, r, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag[0] == 0.0 or np.any(diag < rank_tol * diag[0]):
        raise RankDeficient(f"design matrix rank < {k}")
    beta_piv = scipy.linalg.solve_triangular(r, q.T @ y)
    beta = np.empty(k)
    beta[piv] = beta_piv
    resid = y - X @ beta
    sigma2 = float(resid @ resid / (n - k))
    rinv = scipy.linalg.solve_triangular(r, np.eye(k))
    cov_piv = rinv @ rinv.T
    var = np.empty(k)
    var[piv] = np.diag(cov_piv)
    return OlsFit(beta, resid, np.sqrt(var * sigma2), sigma2, k)
