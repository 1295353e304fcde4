"""Polynomial-coded matrix multiplication with an all-pay auction for worker CPU power."""
from .auction import (
    AuctionConfig,
    BidFunction,
    CostModel,
    equilibrium_accumulator,
    equilibrium_bid,
    foc_residual,
    master_utility_order_stats,
    master_utility_simplified,
    monte_carlo_master_utility,
    tabulate_bid_function,
    winning_probabilities,
    worker_expected_utility,
    wta_local_test,
)
from .coded_matmul import (
    FieldMatrix,
    NotDecodableError,
    PartitionSpec,
    decode,
    encode,
    end_to_end,
    partition,
    recovery_threshold,
    worker_multiply,
)
from .estimator import AllPayEquilibrium
from .finite_field import FieldElement, PrimeField
from .order_stats import UniformValuation
from .reward_structures import (
    RewardSchedule,
    make_arithmetic,
    make_geometric,
    make_homogeneous,
    make_single,
)

__version__ = "0.1.0"
