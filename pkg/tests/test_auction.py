import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from coded_allpay.auction import (
    AuctionConfig,
    BidFunction,
    CostModel,
    StepError,
    equilibrium_accumulator,
    equilibrium_bid,
    foc_residual,
    master_utility_order_stats,
    master_utility_simplified,
    monte_carlo_master_utility,
    monte_carlo_round,
    rank_with_ties,
    tabulate_bid_function,
    top_bid_bound,
    winning_probabilities,
    worker_expected_utility,
    worker_realized_utility,
    wta_local_test,
)
from coded_allpay.order_stats import UniformValuation, cdf_kth_highest
from coded_allpay.reward_structures import (
    RewardSchedule,
    make_arithmetic,
    make_geometric,
    make_homogeneous,
    make_single,
)

from oracles import poly_accumulator, poly_bid


def cfg(I, schedule, cost=None):
    return AuctionConfig(I, schedule, UniformValuation(), cost or CostModel.normalized())


SINGLE5 = cfg(5, make_single(1))


@pytest.fixture(scope="module")
def single5_bids():
    return tabulate_bid_function(SINGLE5)


def test_cost_model():
    c = CostModel(2.0, 3.0, 5.0)
    assert c.scale == 30.0
    assert c.cost(0.5) == pytest.approx(7.5)
    assert c.energy(0.5) == pytest.approx(3.75)
    assert c.inverse_cost(c.cost(0.7)) == pytest.approx(0.7)
    assert CostModel.table1().scale == pytest.approx(5e-13)
    with pytest.raises(ValueError):
        CostModel(0.0, 1.0, 1.0)


def test_config_rejects_more_prizes_than_workers():
    with pytest.raises(ValueError, match="K <= I"):
        cfg(3, make_homogeneous(4))
    with pytest.raises(ValueError):
        cfg(1, make_single(1))
    with pytest.raises(ValueError, match="ordering"):
        cfg(3, RewardSchedule((0.2, 0.8), 1.0))


def test_winning_probabilities_examples():
    c = cfg(2, make_single(1))
    assert winning_probabilities(0.5, c) == pytest.approx([0.5])
    c = cfg(6, make_arithmetic(4, 0.05))
    assert winning_probabilities(1.0, c).sum() == pytest.approx(1.0)
    assert np.allclose(winning_probabilities(0.0, c), 0.0)


def test_winning_probabilities_normalization():
    v = np.linspace(0, 1, 41)
    for I, K in [(5, 1), (5, 4), (10, 3), (5, 5)]:
        c = cfg(I, make_homogeneous(K))
        p = winning_probabilities(v, c)
        assert p.shape == (41, K)
        assert np.all(p >= -1e-15)
        assert np.allclose(p.sum(axis=-1), cdf_kth_highest(K, I - 1, c.dist, v), atol=1e-9)


def test_winning_probabilities_k_equals_i():
    c = cfg(4, make_homogeneous(4))
    # last place is taken with certainty when nobody else is below
    assert winning_probabilities(0.0, c)[-1] == pytest.approx(1.0)


def test_accumulator_single_prize_closed_form():
    for v in (0.0, 0.3, 0.77, 1.0):
        assert equilibrium_accumulator(v, SINGLE5) == pytest.approx(0.8 * v**5, abs=1e-12)
    assert equilibrium_accumulator(0.0, SINGLE5) == 0.0


def test_accumulator_arithmetic_fifteen_workers():
    c = cfg(15, make_arithmetic(4, 0.05))
    expected = 0.05 * (14 + 13 + 12) / 15 + 0.175 * 11 / 15
    assert expected == pytest.approx(0.258333, abs=1e-6)
    assert poly_accumulator(1.0, 15, c.schedule.prizes) == pytest.approx(expected, abs=1e-12)
    assert equilibrium_accumulator(1.0, c) == pytest.approx(expected, abs=1e-10)


def test_equilibrium_bid_examples():
    assert equilibrium_bid(1.0, SINGLE5) == pytest.approx(math.sqrt(0.8), abs=1e-9)
    assert equilibrium_bid(0.0, SINGLE5) == 0.0
    t1 = cfg(5, make_single(1), CostModel.table1())
    assert equilibrium_bid(1.0, t1) == pytest.approx(math.sqrt(0.8 / 5e-13), rel=1e-9)
    assert equilibrium_bid(1.0, t1) == pytest.approx(1.264911e6, rel=1e-6)


def test_tabulated_matches_closed_form():
    bids = tabulate_bid_function(SINGLE5, 1001)
    v = np.linspace(0, 1, 1001)
    assert np.max(np.abs(bids(v) - np.sqrt(0.8 * v**5))) <= 1e-6
    off = np.linspace(0.0005, 0.9995, 1000)
    assert np.max(np.abs(bids(off) - np.sqrt(0.8 * off**5))) <= 1e-6


def test_tabulate_two_knots():
    bids = tabulate_bid_function(SINGLE5, 2)
    assert bids(0.0) == 0.0
    assert list(bids.grid) == [0.0, 1.0]
    with pytest.raises(ValueError):
        tabulate_bid_function(SINGLE5, 1)


def test_tabulate_grid_convergence():
    b1 = tabulate_bid_function(SINGLE5, 1001).max_bid
    b2 = tabulate_bid_function(SINGLE5, 2001).max_bid
    assert abs(b1 - b2) / b2 <= 1e-6


@pytest.mark.parametrize("I,schedule", [
    (5, make_arithmetic(4, 0.05)),
    (15, make_arithmetic(4, 0.05)),
    (10, make_geometric(4, 0.8)),
    (10, make_homogeneous(5)),
    (6, make_homogeneous(6)),
])
def test_tabulated_matches_polynomial_oracle(I, schedule):
    bids = tabulate_bid_function(cfg(I, schedule))
    for v in np.linspace(0, 1, 23):
        assert bids(v) == pytest.approx(poly_bid(v, I, schedule.prizes), abs=1e-9)


def test_bid_function_is_monotone_and_starts_at_zero(single5_bids):
    assert single5_bids(0.0) == 0.0
    assert np.all(np.diff(single5_bids.accumulator) >= 0)
    v = np.linspace(0, 1, 3001)
    assert np.all(np.diff(single5_bids(v)) > 0)


def test_expected_utility_lowest_type_is_zero(single5_bids):
    assert worker_expected_utility(0.0, 0.0, SINGLE5, single5_bids) == 0.0


def test_expected_utility_two_workers_hand_formula():
    # beta(w) = w / sqrt(2): u = v*w - w**2/2
    c = cfg(2, make_single(1))
    bids = tabulate_bid_function(c)
    assert bids(0.5) == pytest.approx(0.5 / math.sqrt(2), abs=1e-12)
    assert worker_expected_utility(0.5, 0.5, c, bids) == pytest.approx(0.125, abs=1e-12)
    assert worker_expected_utility(0.5, 0.3, c, bids) == pytest.approx(0.5 * 0.3 - 0.045, abs=1e-12)


def test_truthful_beats_every_deviation(single5_bids):
    w = np.linspace(0, 1, 201)
    for v in np.linspace(0, 1, 11):
        u = worker_expected_utility(v, w, SINGLE5, single5_bids)
        truthful = worker_expected_utility(v, v, SINGLE5, single5_bids)
        assert np.all(truthful >= u - 1e-12)


def test_realized_utility_examples():
    assert worker_realized_utility(1.0, 1, SINGLE5, 0.0) == 1.0
    assert worker_realized_utility(0.7, 3, SINGLE5, 0.0) == 0.0
    assert worker_realized_utility(0.7, 3, SINGLE5, 0.5) == pytest.approx(-0.25)
    with pytest.raises(ValueError):
        worker_realized_utility(0.7, 0, SINGLE5, 0.5)


def test_foc_examples(single5_bids):
    assert abs(foc_residual(0.5, SINGLE5, single5_bids)) <= 1e-4
    assert abs(foc_residual(0.0, SINGLE5, single5_bids)) <= 1e-4
    c = cfg(10, make_arithmetic(4, 0.05))
    bids = tabulate_bid_function(c)
    for v in np.linspace(0.1, 0.9, 9):
        assert abs(foc_residual(v, c, bids)) <= 1e-4


def test_foc_detects_a_wrong_strategy():
    # doubling the bids breaks the first-order condition
    c = SINGLE5
    good = tabulate_bid_function(c)
    bad = BidFunction(good.grid, 4 * good.accumulator, c.cost, lambda u: 4 * good.integrand(u))
    assert abs(foc_residual(0.7, c, bad)) > 1e-2


def test_master_utility_single_prize(single5_bids):
    simplified = master_utility_simplified(SINGLE5, single5_bids)
    assert simplified == pytest.approx(math.sqrt(0.8) / 3.5, abs=1e-9)
    assert simplified == pytest.approx(0.255551, abs=1e-6)
    # top bid only: E[sqrt(0.8) v_{1:5}^2.5] = sqrt(0.8) * 5 / 7.5
    expected = math.sqrt(0.8) * 5 / 7.5 - 1.0
    assert master_utility_order_stats(SINGLE5, single5_bids) == pytest.approx(expected, abs=1e-9)


def test_master_utility_monte_carlo_cross_check(single5_bids):
    pi = master_utility_order_stats(SINGLE5, single5_bids)
    mean, se = monte_carlo_master_utility(SINGLE5, single5_bids, 100_000, seed=3)
    assert abs(mean - pi) <= 3 * se


def test_master_utility_k_equals_i_identity():
    c = cfg(6, make_homogeneous(6))
    bids = tabulate_bid_function(c)
    full = master_utility_order_stats(c, bids)
    assert full + c.sigma == pytest.approx(master_utility_simplified(c, bids), abs=1e-9)


def test_master_utility_zero_bids():
    c = SINGLE5
    grid = np.linspace(0, 1, 11)
    zero = BidFunction(grid, np.zeros(11), c.cost, lambda u: np.zeros_like(np.asarray(u, float)))
    assert master_utility_order_stats(c, zero) == pytest.approx(-c.sigma)
    assert master_utility_simplified(c, zero, n_rewards=0) == 0.0


def test_monte_carlo_round_determinism(single5_bids):
    a = monte_carlo_round(SINGLE5, single5_bids, 17)
    b = monte_carlo_round(SINGLE5, single5_bids, 17)
    assert np.array_equal(a.valuations, b.valuations)
    assert np.array_equal(a.ranks, b.ranks)
    assert a.master_utility_sample == b.master_utility_sample
    assert sorted(a.ranks) == [1, 2, 3, 4, 5]
    assert a.prizes.sum() == pytest.approx(1.0)


def test_rank_ties_are_uniform():
    rng = np.random.default_rng(0)
    reps, n = 60_000, 3
    ranks = rank_with_ties(np.zeros((reps, n)), rng)
    perms = [tuple(r) for r in ranks]
    counts = np.unique(np.array(perms), axis=0, return_counts=True)[1]
    assert len(counts) == math.factorial(n)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_equal_valuation_rounds_rank_uniformly(single5_bids):
    rng = np.random.default_rng(4)
    first = np.zeros(5)
    for _ in range(5000):
        out = monte_carlo_round(SINGLE5, single5_bids, rng, valuations=np.full(5, 0.6))
        first[np.argmin(out.ranks)] += 1
    assert stats.chisquare(first).pvalue > 1e-3


def test_rank_respects_bid_order():
    r = rank_with_ties(np.array([0.1, 0.9, 0.5]), np.random.default_rng(0))
    assert list(r) == [3, 1, 2]


def test_wta_rejects_bad_steps():
    c = cfg(5, make_single(4))
    with pytest.raises(StepError):
        wta_local_test(c, step=0.0)
    with pytest.raises(StepError):
        wta_local_test(c, step=0.5)
    with pytest.raises(StepError):
        wta_local_test(SINGLE5)


def test_wta_is_deterministic():
    c = cfg(5, make_single(4))
    a = wta_local_test(c, grid_size=2001, intervals=2000)
    b = wta_local_test(c, grid_size=2001, intervals=2000)
    assert a == b
    assert a.ks == (2, 3, 4)


def test_wta_smooth_interior_point_converges():
    c = cfg(5, make_arithmetic(4, 0.05))
    h1 = wta_local_test(c, step=1e-4).differences
    h2 = wta_local_test(c, step=5e-5).differences
    assert np.allclose(h1, h2, rtol=1e-3)


def test_wta_transfer_matches_directional_derivative_of_linear_prizes():
    # cross-check against a one-sided difference in the opposite direction
    c = cfg(5, make_homogeneous(4))
    rep = wta_local_test(c, step=1e-5)

    def pi(prizes):
        cc = replace(c, schedule=RewardSchedule(prizes, 1.0), strict=False)
        return master_utility_order_stats(cc, tabulate_bid_function(cc))

    base = pi(c.schedule.prizes)
    h = 1e-6
    fwd = pi((0.25 + h, 0.25 - h, 0.25, 0.25))
    assert rep.differences[0] == pytest.approx((fwd - base) / h, rel=1e-3)


def test_top_bid_bound_single_prize_equality():
    for I in (2, 5, 15):
        c = cfg(I, make_single(1))
        bids = tabulate_bid_function(c)
        assert bids.max_bid == pytest.approx(top_bid_bound(c), rel=1e-9)
