"""Scikit-learn style wrapper around the equilibrium bid computation."""
from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .auction import (
    DEFAULT_GRID,
    AuctionConfig,
    CostModel,
    master_utility_order_stats,
    master_utility_simplified,
    monte_carlo_master_utility,
    tabulate_bid_function,
    top_bid_bound,
    worker_expected_utility,
    wta_local_test,
)
from .order_stats import make_distribution
from .reward_structures import parse_structure
from .validation import check_cost_mode, check_positive, check_valuations


class AllPayEquilibrium(TransformerMixin, BaseEstimator):
    """Symmetric equilibrium CPU-power bids for an all-pay prize contest.

    ``fit`` tabulates the bid function for the configured contest; nothing
    is learned from data, so ``X`` and ``y`` are ignored there.
    ``transform``/``predict`` map valuations to equilibrium bids.

    Parameters
    ----------
    n_workers : int
        Number of competing workers I.
    structure : str
        ``single``, ``homogeneous``, ``arithmetic:<gamma>`` or ``geometric:<eta>``.
    n_rewards : int or None
        Number of prizes K. Defaults to 1 for ``single`` and 4 otherwise.
    sigma : float
        Total prize budget.
    cost_mode : {"normalized", "table1"}
        Base cost constants; explicit ``theta``/``kappa``/``cycles`` override them.
    grid_size : int
        Knots of the tabulated bid function.

    Attributes
    ----------
    config_ : AuctionConfig
    bid_function_ : BidFunction
    """

    def __init__(self, n_workers=5, structure="single", n_rewards=None, sigma=1.0,
                 cost_mode="normalized", theta=None, kappa=None, cycles=None,
                 valuation="uniform", lo=0.0, hi=1.0, grid_size=DEFAULT_GRID):
        self.n_workers = n_workers
        self.structure = structure
        self.n_rewards = n_rewards
        self.sigma = sigma
        self.cost_mode = cost_mode
        self.theta = theta
        self.kappa = kappa
        self.cycles = cycles
        self.valuation = valuation
        self.lo = lo
        self.hi = hi
        self.grid_size = grid_size

    def _build_config(self) -> AuctionConfig:
        check_positive(self.n_workers, "n_workers", integer=True)
        check_positive(self.sigma, "sigma")
        check_positive(self.grid_size, "grid_size", integer=True)
        base = CostModel.table1() if check_cost_mode(self.cost_mode) == "table1" else CostModel.normalized()
        cost = CostModel(
            theta=base.theta if self.theta is None else self.theta,
            kappa=base.kappa if self.kappa is None else self.kappa,
            cycles=base.cycles if self.cycles is None else self.cycles,
        )
        K = self.n_rewards
        if K is None:
            K = 1 if self.structure.strip().lower() == "single" else min(4, self.n_workers)
        schedule = parse_structure(self.structure, K, self.sigma)
        dist = make_distribution(self.valuation, self.lo, self.hi)
        return AuctionConfig(self.n_workers, schedule, dist, cost)

    def fit(self, X=None, y=None):
        self.config_ = self._build_config()
        self.bid_function_ = tabulate_bid_function(self.config_, self.grid_size)
        return self

    def transform(self, X):
        check_is_fitted(self, "bid_function_")
        X = check_valuations(X, self.config_.dist.lo, self.config_.dist.hi)
        return self.bid_function_(X)

    def predict(self, X):
        return self.transform(X)

    def expected_utility(self, v, pretend=None):
        """Expected payoff at valuation ``v`` when bidding as type ``pretend`` (default: truthful)."""
        check_is_fitted(self, "bid_function_")
        pretend = v if pretend is None else pretend
        return worker_expected_utility(v, pretend, self.config_, self.bid_function_)

    def master_utility(self, simplified=False):
        check_is_fitted(self, "bid_function_")
        if simplified:
            return master_utility_simplified(self.config_, self.bid_function_)
        return master_utility_order_stats(self.config_, self.bid_function_)

    def simulate_master_utility(self, rounds=100_000, seed=0):
        check_is_fitted(self, "bid_function_")
        return monte_carlo_master_utility(self.config_, self.bid_function_, rounds, seed)

    def top_bid_bound(self):
        check_is_fitted(self, "config_")
        return top_bid_bound(self.config_)

    def wta_test(self, step=None):
        check_is_fitted(self, "config_")
        return wta_local_test(self.config_, step=step, grid_size=self.grid_size)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = True
        return tags
