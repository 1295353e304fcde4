"""Input checks shared by the estimator and the CLI."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array

COST_MODES = ("normalized", "table1")


def check_positive(value, name: str, integer: bool = False):
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(value, bool) or not isinstance(value, kind):
        raise TypeError(f"{name} must be {'an integer' if integer else 'a number'}, got {value!r}")
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_cost_mode(mode: str) -> str:
    if mode not in COST_MODES:
        raise ValueError(f"cost_mode must be one of {COST_MODES}, got {mode!r}")
    return mode


def check_valuations(X, lo: float, hi: float) -> np.ndarray:
    """Coerce valuations to a float array and reject values outside ``[lo, hi]``.

    Accepts scalars, 1-D vectors, or 2-D arrays of shape (n_samples, 1).
    """
    if np.ndim(X) == 0:
        X = np.array([X], dtype=float)
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    if X.ndim == 2 and X.shape[1] != 1:
        raise ValueError(f"expected a single valuation column, got shape {X.shape}")
    if np.any(X < lo) or np.any(X > hi):
        raise ValueError(f"valuations must lie in [{lo}, {hi}]")
    return X
