"""Input coercion helpers used by the estimators and the functional API."""
from __future__ import annotations

import numbers

import numpy as np

from .exceptions import TooShort, ValidationError


def check_1d(values, name="series", min_length=1, allow_nan=False) -> np.ndarray:
    """Return ``values`` as a finite 1-d float array or raise ``ValidationError``."""
    if hasattr(values, "values") and not isinstance(values, np.ndarray):
        values = values.values
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not allow_nan and not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    if arr.size < min_length:
        raise TooShort(f"{name} needs at least {min_length} observations, got {arr.size}")
    return arr


def check_int(value, name, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_probability(value, name) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValidationError(f"{name} must lie in (0, 1), got {value}")
    return value


def check_is_fitted(estimator, attribute):
    """Raise sklearn's ``NotFittedError`` when ``attribute`` is missing."""
    from sklearn.exceptions import NotFittedError

    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call 'fit' first."
        )
