"""Order statistics of i.i.d. valuations.

``k`` counts from the top: ``v_{1:n}`` is the largest of ``n`` draws.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .quadrature import DEFAULT_INTERVALS, simpson


class ValuationDistribution(ABC):
    """Common interface for valuation priors on a bounded support."""

    lo: float
    hi: float

    @abstractmethod
    def cdf(self, v): ...

    @abstractmethod
    def pdf(self, v): ...

    @abstractmethod
    def sample(self, size, rng: np.random.Generator): ...

    @property
    def support(self) -> tuple[float, float]:
        return self.lo, self.hi


@dataclass(frozen=True)
class UniformValuation(ValuationDistribution):
    lo: float = 0.0
    hi: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError("support bounds must be finite")
        if self.lo < 0:
            raise ValueError(f"valuations must be nonnegative, got lo={self.lo}")
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    def cdf(self, v):
        return np.clip((np.asarray(v, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        inside = (v >= self.lo) & (v <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    def sample(self, size, rng: np.random.Generator):
        return rng.uniform(self.lo, self.hi, size=size)


def make_distribution(kind: str = "uniform", lo: float = 0.0, hi: float = 1.0) -> ValuationDistribution:
    if kind != "uniform":
        raise ValueError(f"unknown valuation distribution {kind!r}; only 'uniform' is built in")
    return UniformValuation(float(lo), float(hi))


def binom(n: int, k: int) -> float:
    """Binomial coefficient; exact below n=60, log-gamma above."""
    if k < 0 or k > n:
        return 0.0
    if n <= 60:
        return float(math.comb(n, k))
    return math.exp(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1))


def _check_kn(k: int, n: int):
    if n < 0 or k < 0:
        raise ValueError(f"k and n must be nonnegative, got k={k}, n={n}")


def cdf_kth_highest(k: int, n: int, dist: ValuationDistribution, v):
    """P(k-th highest of n draws <= v).

    Follows the conventions F_{0:n} = 0 and F_{n+1:n} = 1.
    """
    _check_kn(k, n)
    if k > n + 1:
        raise ValueError(f"k must be at most n+1={n + 1}, got {k}")
    F = dist.cdf(v)
    if k == n + 1:
        return np.ones_like(F)
    total = np.zeros_like(F)
    # at most k-1 of the n draws exceed v
    for j in range(k):
        total = total + binom(n, j) * (1.0 - F) ** j * F ** (n - j)
    return np.clip(total, 0.0, 1.0)


def pdf_kth_highest(k: int, n: int, dist: ValuationDistribution, v):
    _check_kn(k, n)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    F = dist.cdf(v)
    coef = n * binom(n - 1, k - 1)
    return coef * F ** (n - k) * (1.0 - F) ** (k - 1) * dist.pdf(v)


def expected_kth_highest(k: int, n: int, dist: ValuationDistribution,
                         intervals: int = DEFAULT_INTERVALS) -> float:
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    return simpson(lambda u: u * pdf_kth_highest(k, n, dist, u), dist.lo, dist.hi, intervals)


def sample_descending(n: int, dist: ValuationDistribution, rng, size=None) -> np.ndarray:
    """``n`` i.i.d. draws sorted from highest to lowest.

    With ``size`` given, returns an array of shape (size, n), one sorted row
    per replication.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(rng)
    shape = (n,) if size is None else (size, n)
    draws = dist.sample(shape, rng)
    return -np.sort(-draws, axis=-1)
