"""Rounds of the auction coupled to the coded-computing timeline.

Each worker's equilibrium bid doubles as its compute rate, so a worker
finishes its coded subtask after ``cycles / z`` time units (plus an optional
fixed transmission delay). The master needs only the first K results; an
uncoded scheme has to wait for all I.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .auction import (
    AuctionConfig,
    BidFunction,
    rank_with_ties,
    round_streams,
    worker_realized_utility,
)


@dataclass(frozen=True)
class CompletionModel:
    cycles: float = 1.0
    fixed_delay: float = 0.0

    def __post_init__(self):
        if not self.cycles > 0:
            raise ValueError(f"cycles must be positive, got {self.cycles}")
        if not self.fixed_delay >= 0:
            raise ValueError(f"fixed_delay must be nonnegative, got {self.fixed_delay}")


def completion_time(z, model: CompletionModel):
    """Time to finish a subtask at CPU power ``z``; ``inf`` for a non-participant."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("CPU power cannot be negative")
    with np.errstate(divide="ignore"):
        t = np.where(z > 0, model.cycles / np.where(z > 0, z, 1.0) + model.fixed_delay, np.inf)
    return float(t) if t.ndim == 0 else t


@dataclass(frozen=True)
class WorkerRecord:
    worker_id: int
    valuation: float
    bid: float
    energy: float
    rank: int
    prize: float
    utility: float
    completion_time: float


@dataclass(frozen=True)
class SimulationOutcome:
    records: tuple[WorkerRecord, ...]
    coded_completion_time: float
    uncoded_completion_time: float
    master_payment: float
    master_utility_sample: float

    @property
    def speedup(self) -> float:
        if self.coded_completion_time == self.uncoded_completion_time:
            return 1.0
        return self.uncoded_completion_time / self.coded_completion_time


def run_round(config: AuctionConfig, completion_model: CompletionModel, bids: BidFunction,
              rng, valuations=None) -> SimulationOutcome:
    rng = np.random.default_rng(rng)
    if valuations is None:
        valuations = config.dist.sample(config.workers, rng)
    v = np.asarray(valuations, dtype=float)
    if v.shape != (config.workers,):
        raise ValueError(f"expected {config.workers} valuations, got shape {v.shape}")
    z = bids(v)
    ranks = rank_with_ties(z, rng)
    times = completion_time(z, completion_model)
    energy = config.cost.energy(z)
    prizes = config.schedule.padded(config.workers + 1)
    records = tuple(
        WorkerRecord(
            worker_id=i + 1,
            valuation=float(v[i]),
            bid=float(z[i]),
            energy=float(energy[i]),
            rank=int(ranks[i]),
            prize=float(prizes[ranks[i] - 1]),
            utility=worker_realized_utility(v[i], int(ranks[i]), config, z[i]),
            completion_time=float(times[i]),
        )
        for i in range(config.workers)
    )
    ordered = np.sort(times)
    top = np.sort(z)[::-1][:config.K].sum()
    return SimulationOutcome(
        records=records,
        coded_completion_time=float(ordered[config.K - 1]),
        uncoded_completion_time=float(ordered[-1]),
        master_payment=config.sigma,
        master_utility_sample=float(top - config.sigma),
    )


def simulate_rounds(config: AuctionConfig, completion_model: CompletionModel,
                    bids: BidFunction, rounds: int, seed=0):
    """Yield one outcome per round; each chunk of rounds owns a child stream of ``seed``."""
    for n, rng in round_streams(seed, rounds):
        for _ in range(n):
            yield run_round(config, completion_model, bids, rng)


@dataclass(frozen=True)
class CodedComparison:
    rounds: int
    mean_coded: float
    stderr_coded: float
    mean_uncoded: float
    stderr_uncoded: float
    speedup: float
    mean_round_speedup: float
    min_round_speedup: float


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if len(x) < 2 or not np.all(np.isfinite(x)):
        return float(x.mean()), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(len(x)))


def simulate_batch(config: AuctionConfig, completion_model: CompletionModel,
                   bids: BidFunction, rounds: int, seed=0) -> dict[str, np.ndarray]:
    """Vectorized rounds: per-round aggregates keyed by name, one entry per round.

    Per-worker arrays (``valuations``, ``bids``, ``ranks``) have shape (rounds, I).
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    parts = []
    for n, rng in round_streams(seed, rounds):
        v = config.dist.sample((n, config.workers), rng)
        z = bids(v)
        ranks = rank_with_ties(z, rng)
        t = np.sort(completion_time(z, completion_model), axis=1)
        top = -np.sort(-z, axis=1)[:, :config.K].sum(axis=1)
        parts.append(dict(valuations=v, bids=z, ranks=ranks, coded=t[:, config.K - 1],
                          uncoded=t[:, -1], master_utility=top - config.sigma))
    out = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    with np.errstate(invalid="ignore", divide="ignore"):
        out["speedup"] = np.where(out["coded"] == out["uncoded"], 1.0,
                                  out["uncoded"] / out["coded"])
    return out


def compare_coded_uncoded(config: AuctionConfig, completion_model: CompletionModel,
                          bids: BidFunction, rounds: int, seed=0) -> CodedComparison:
    """Completion times waiting for K results versus all I, over many rounds."""
    batch = simulate_batch(config, completion_model, bids, rounds, seed)
    coded, uncoded, ratio = batch["coded"], batch["uncoded"], batch["speedup"]
    mc, sc = _mean_se(coded)
    mu, su = _mean_se(uncoded)
    return CodedComparison(
        rounds=rounds,
        mean_coded=mc,
        stderr_coded=sc,
        mean_uncoded=mu,
        stderr_uncoded=su,
        speedup=1.0 if mu == mc else (mu / mc if mc > 0 else float("nan")),
        mean_round_speedup=float(ratio.mean()),
        min_round_speedup=float(ratio.min()),
    )
