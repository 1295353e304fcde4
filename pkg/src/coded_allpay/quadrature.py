"""Composite Simpson quadrature helpers."""
from __future__ import annotations

import numpy as np

DEFAULT_INTERVALS = 10_000


def simpson(f, a: float, b: float, intervals: int = DEFAULT_INTERVALS) -> float:
    """Composite Simpson rule for a vectorized integrand on [a, b]."""
    if intervals < 2:
        raise ValueError("need at least 2 intervals")
    if intervals % 2:
        intervals += 1
    x = np.linspace(a, b, intervals + 1)
    y = np.asarray(f(x), dtype=float)
    h = (b - a) / intervals
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def simpson_panels(f, knots: np.ndarray) -> np.ndarray:
    """Per-panel Simpson integrals of ``f`` between consecutive knots.

    Each panel uses its own midpoint, so the cumulative sum gives the
    running integral at every knot in one vectorized pass.
    """
    knots = np.asarray(knots, dtype=float)
    left, right = knots[:-1], knots[1:]
    mid = 0.5 * (left + right)
    return (right - left) / 6.0 * (f(left) + 4.0 * f(mid) + f(right))


def cumulative_simpson(f, knots: np.ndarray) -> np.ndarray:
    """Running integral of ``f`` from ``knots[0]`` to each knot; starts at 0."""
    out = np.zeros(len(knots))
    np.cumsum(simpson_panels(f, knots), out=out[1:])
    return out
