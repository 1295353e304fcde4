"""Symmetric all-pay auction over CPU power.

Each of ``I`` workers privately draws a valuation ``v`` and allocates CPU
power ``z``; all of them pay the energy cost ``theta * kappa * a * z**2`` and
the ``k``-th largest allocation earns prize ``M_k``. In the symmetric
equilibrium the cost of the bid equals the accumulated expected marginal
prize value

    c(beta(v)) = G(v) = sum_{k=1}^{I-1} (M_k - M_{k+1}) * int_lo^v u f_{k:I-1}(u) du

with ``M_k = 0`` beyond the last prize, so ``beta(v) = sqrt(G(v) / (theta kappa a))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .order_stats import (
    UniformValuation,
    ValuationDistribution,
    cdf_kth_highest,
    expected_kth_highest,
    pdf_kth_highest,
)
from .quadrature import DEFAULT_INTERVALS, cumulative_simpson, simpson
from .reward_structures import RewardSchedule, validate

DEFAULT_GRID = DEFAULT_INTERVALS + 1


class StepError(ValueError):
    """Finite-difference step is zero, negative or too large."""


@dataclass(frozen=True)
class CostModel:
    """Quadratic energy cost: energy ``kappa * a * z**2`` priced at ``theta`` per unit."""

    theta: float = 1.0
    kappa: float = 1.0
    cycles: float = 1.0

    def __post_init__(self):
        for name in ("theta", "kappa", "cycles"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be strictly positive, got {v}")

    @classmethod
    def table1(cls) -> "CostModel":
        return cls(theta=1.0, kappa=1e-25, cycles=5e12)

    @classmethod
    def normalized(cls) -> "CostModel":
        return cls(1.0, 1.0, 1.0)

    @property
    def scale(self) -> float:
        return self.theta * self.kappa * self.cycles

    def energy(self, z):
        return self.kappa * self.cycles * np.square(z)

    def cost(self, z):
        return self.scale * np.square(z)

    def inverse_cost(self, y):
        return np.sqrt(np.maximum(y, 0.0) / self.scale)


@dataclass(frozen=True)
class AuctionConfig:
    workers: int
    schedule: RewardSchedule
    dist: ValuationDistribution = field(default_factory=UniformValuation)
    cost: CostModel = field(default_factory=CostModel)
    # perturbed prize vectors used for numerical derivatives skip the ordering checks
    strict: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if int(self.workers) != self.workers or self.workers < 2:
            raise ValueError(f"need at least 2 workers, got {self.workers}")
        if self.schedule.K > self.workers:
            raise ValueError(
                f"{self.schedule.K} prizes for {self.workers} workers; need K <= I"
            )
        if self.strict:
            problem = validate(self.schedule)
            if problem:
                raise ValueError(problem)

    @property
    def K(self) -> int:
        return self.schedule.K

    @property
    def sigma(self) -> float:
        return self.schedule.sigma

    def prize_gaps(self) -> np.ndarray:
        """``M_k - M_{k+1}`` for k = 1..I-1 (prizes beyond K are zero)."""
        M = self.schedule.padded(self.workers + 1)
        return M[:self.workers - 1] - M[1:self.workers]


def _accumulator_integrand(config: AuctionConfig):
    gaps = config.prize_gaps()
    n = config.workers - 1
    dist = config.dist
    terms = [(k, g) for k, g in enumerate(gaps, start=1) if g != 0.0]

    def integrand(u):
        u = np.asarray(u, dtype=float)
        total = np.zeros_like(u)
        for k, g in terms:
            total = total + g * pdf_kth_highest(k, n, dist, u)
        return u * total

    return integrand


def winning_probabilities(v, config: AuctionConfig) -> np.ndarray:
    """Chance of finishing in place k = 1..K against ``I-1`` equilibrium rivals.

    Returns an array with a trailing axis of length K.
    """
    n = config.workers - 1
    v = np.asarray(v, dtype=float)
    cdfs = [cdf_kth_highest(k, n, config.dist, v) for k in range(config.K + 1)]
    return np.stack([cdfs[k] - cdfs[k - 1] for k in range(1, config.K + 1)], axis=-1)


def equilibrium_accumulator(v: float, config: AuctionConfig,
                            intervals: int = DEFAULT_INTERVALS) -> float:
    lo = config.dist.lo
    v = float(np.clip(v, lo, config.dist.hi))
    if v == lo:
        return 0.0
    return simpson(_accumulator_integrand(config), lo, v, intervals)


@dataclass(frozen=True, eq=False)
class BidFunction:
    """Tabulated equilibrium strategy.

    ``accumulator`` holds G at each grid knot. Between knots G is completed
    by a single Simpson panel from the knot below, which agrees with the
    tabulated value at both ends and stays nondecreasing.
    """

    grid: np.ndarray
    accumulator: np.ndarray
    cost: CostModel
    integrand: object = field(repr=False)

    def accumulator_at(self, v):
        v = np.clip(np.asarray(v, dtype=float), self.grid[0], self.grid[-1])
        j = np.clip(np.searchsorted(self.grid, v, side="right") - 1, 0, len(self.grid) - 2)
        left = self.grid[j]
        mid = 0.5 * (left + v)
        f = self.integrand
        panel = (v - left) / 6.0 * (f(left) + 4.0 * f(mid) + f(v))
        return self.accumulator[j] + panel

    def __call__(self, v):
        return self.cost.inverse_cost(self.accumulator_at(v))

    @property
    def knot_bids(self) -> np.ndarray:
        return self.cost.inverse_cost(self.accumulator)

    @property
    def max_bid(self) -> float:
        return float(self.cost.inverse_cost(self.accumulator[-1]))


def tabulate_bid_function(config: AuctionConfig, grid_size: int = DEFAULT_GRID) -> BidFunction:
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    grid = np.linspace(config.dist.lo, config.dist.hi, int(grid_size))
    integrand = _accumulator_integrand(config)
    acc = cumulative_simpson(integrand, grid)
    return BidFunction(grid, acc, config.cost, integrand)


def equilibrium_bid(v, config: AuctionConfig, intervals: int = DEFAULT_INTERVALS):
    if np.ndim(v) == 0:
        return float(config.cost.inverse_cost(equilibrium_accumulator(v, config, intervals)))
    return tabulate_bid_function(config, intervals + 1)(v)


def worker_expected_utility(v, pretend, config: AuctionConfig, bids: BidFunction):
    """Expected payoff of a worker with valuation ``v`` bidding as if it had ``pretend``."""
    p = winning_probabilities(pretend, config)
    prize_value = p @ np.asarray(config.schedule.prizes)
    return np.asarray(v) * prize_value - config.cost.cost(bids(pretend))


def worker_realized_utility(v: float, rank: int, config: AuctionConfig, z: float) -> float:
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    paid = config.cost.theta * config.cost.energy(z)
    prize = config.schedule.prizes[rank - 1] if rank <= config.K else 0.0
    return float(v * prize - paid)


def foc_residual(v: float, config: AuctionConfig, bids: BidFunction, h: float = 1e-5) -> float:
    """Slope of the deviation utility in the pretend valuation, at the truth."""
    lo, hi = config.dist.lo, config.dist.hi
    u = lambda w: float(worker_expected_utility(v, w, config, bids))
    if v - h < lo:
        return (u(v + h) - u(v)) / h
    if v + h > hi:
        return (u(v) - u(v - h)) / h
    return (u(v + h) - u(v - h)) / (2.0 * h)


def master_utility_order_stats(config: AuctionConfig, bids: BidFunction,
                               intervals: int = DEFAULT_INTERVALS) -> float:
    """Expected sum of the top-K bids, minus the budget."""
    I, dist = config.workers, config.dist

    def integrand(v):
        dens = sum(pdf_kth_highest(k, I, dist, v) for k in range(1, config.K + 1))
        return bids(v) * dens

    return simpson(integrand, dist.lo, dist.hi, intervals) - config.sigma


def master_utility_simplified(config: AuctionConfig, bids: BidFunction,
                              n_rewards: int | None = None,
                              intervals: int = DEFAULT_INTERVALS) -> float:
    """``K * E[beta(v)]`` for a single draw; equals the top-K sum only when K = I."""
    K = config.K if n_rewards is None else n_rewards
    if K == 0:
        return 0.0
    dist = config.dist
    return K * simpson(lambda v: bids(v) * dist.pdf(v), dist.lo, dist.hi, intervals)


def top_bid_bound(config: AuctionConfig) -> float:
    """Upper bound on the top bid: the whole budget at the top rival's mean valuation."""
    e1 = expected_kth_highest(1, config.workers - 1, config.dist)
    return float(np.sqrt(config.sigma * e1 / config.cost.scale))


def rank_with_ties(bids: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """1-based ranks by descending bid along the last axis; ties broken at random."""
    bids = np.asarray(bids, dtype=float)
    keys = rng.random(bids.shape)
    order = np.lexsort((keys, -bids), axis=-1)
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(1, bids.shape[-1] + 1), axis=-1)
    return ranks


@dataclass(frozen=True)
class RoundPayments:
    valuations: np.ndarray
    bids: np.ndarray
    ranks: np.ndarray
    prizes: np.ndarray
    master_utility_sample: float


def monte_carlo_round(config: AuctionConfig, bids: BidFunction, rng,
                      valuations=None) -> RoundPayments:
    rng = np.random.default_rng(rng)
    if valuations is None:
        valuations = config.dist.sample(config.workers, rng)
    valuations = np.asarray(valuations, dtype=float)
    z = bids(valuations)
    ranks = rank_with_ties(z, rng)
    prizes = config.schedule.padded(config.workers + 1)[ranks - 1]
    top = np.sort(z)[::-1][:config.K].sum()
    return RoundPayments(valuations, z, ranks, prizes, float(top - config.sigma))


def round_streams(seed, rounds: int, chunk: int = 4096):
    """Yield ``(n_rounds, generator)`` pairs with one child stream per chunk.

    Chunks are independent, so they can be processed in any order and the
    concatenated result depends only on ``seed``.
    """
    n_chunks = -(-rounds // chunk)
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n_chunks)):
        yield min(chunk, rounds - i * chunk), np.random.default_rng(child)


def monte_carlo_master_utility(config: AuctionConfig, bids: BidFunction,
                               rounds: int = 100_000, seed=0) -> tuple[float, float]:
    """Mean and standard error of the sampled top-K bid sum minus the budget."""
    if rounds < 2:
        raise ValueError("need at least 2 rounds for a standard error")
    samples = []
    for n, rng in round_streams(seed, rounds):
        z = bids(config.dist.sample((n, config.workers), rng))
        top = -np.sort(-z, axis=1)[:, :config.K].sum(axis=1)
        samples.append(top - config.sigma)
    s = np.concatenate(samples)
    return float(s.mean()), float(s.std(ddof=1) / np.sqrt(len(s)))


@dataclass(frozen=True)
class WTAReport:
    """Adjacent-prize transfer derivatives ``dpi/dM_{k-1} - dpi/dM_k`` for k = 2..K."""

    ks: tuple[int, ...]
    differences: tuple[float, ...]
    step: float

    @property
    def condition(self) -> tuple[bool, ...]:
        return tuple(d < 0 for d in self.differences)

    @property
    def splitting_helps(self) -> bool:
        """True when moving budget from M_1 to M_2 raises the master's utility."""
        return bool(self.differences and self.differences[0] < 0)


def _perturbed(config: AuctionConfig, k: int, h: float) -> AuctionConfig:
    M = list(config.schedule.prizes)
    M[k - 2] += h
    M[k - 1] -= h
    sched = RewardSchedule(tuple(M), config.sigma, "perturbed")
    return replace(config, schedule=sched, strict=False)


def wta_local_test(config: AuctionConfig, step: float | None = None,
                   grid_size: int = DEFAULT_GRID,
                   intervals: int = DEFAULT_INTERVALS) -> WTAReport:
    """Symmetric finite differences of the master utility under budget-neutral transfers.

    The perturbed prize vectors may leave the ordered cone (the lower prize
    can dip to ``-step`` when it starts at zero); the accumulator is linear
    in the prizes and is floored at zero before inverting the cost.
    """
    sigma = config.sigma
    h = 1e-4 * sigma if step is None else float(step)
    if not h > 0:
        raise StepError(f"finite-difference step must be positive, got {h}")
    if h > 0.01 * sigma:
        raise StepError(f"step {h} exceeds 1% of the budget {sigma}")
    if config.K < 2:
        raise StepError("need at least two prizes to transfer budget between them")
    if config.schedule.prizes[0] - h < 0:
        raise StepError(f"step {h} would make the top prize negative")

    def pi(cfg):
        return master_utility_order_stats(cfg, tabulate_bid_function(cfg, grid_size), intervals)

    ks, diffs = [], []
    for k in range(2, config.K + 1):
        up = pi(_perturbed(config, k, h))
        down = pi(_perturbed(config, k, -h))
        ks.append(k)
        diffs.append((up - down) / (2.0 * h))
    return WTAReport(tuple(ks), tuple(diffs), h)
