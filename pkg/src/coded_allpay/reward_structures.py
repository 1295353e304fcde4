"""Prize sequences that split a fixed budget among the top K workers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BUDGET_TOL = 1e-12


class InfeasibleScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class RewardSchedule:
    """Decreasing prizes ``M_1 >= ... >= M_K >= 0`` summing to ``sigma``."""

    prizes: tuple[float, ...]
    sigma: float
    label: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "prizes", tuple(float(p) for p in self.prizes))

    @property
    def K(self) -> int:
        return len(self.prizes)

    def padded(self, length: int) -> np.ndarray:
        """Prizes as an array of ``length`` entries, zero beyond K."""
        out = np.zeros(max(length, self.K))
        out[:self.K] = self.prizes
        return out[:length]

    def __len__(self):
        return self.K


def make_single(K: int, sigma: float = 1.0) -> RewardSchedule:
    _check_args(K, sigma)
    return RewardSchedule((sigma,) + (0.0,) * (K - 1), sigma, "single")


def make_homogeneous(K: int, sigma: float = 1.0) -> RewardSchedule:
    _check_args(K, sigma)
    return RewardSchedule((sigma / K,) * K, sigma, "homogeneous")


def make_arithmetic(K: int, gamma: float, sigma: float = 1.0) -> RewardSchedule:
    """Prizes with a constant gap ``gamma`` between neighbours."""
    _check_args(K, sigma)
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    base = sigma / K
    prizes = [base + gamma * (K + 1 - 2 * k) / 2.0 for k in range(1, K + 1)]
    if prizes[-1] < -BUDGET_TOL:
        bound = 2.0 * sigma / (K * (K - 1)) if K > 1 else float("inf")
        raise InfeasibleScheduleError(
            f"gamma={gamma} makes the last prize negative ({prizes[-1]:.6g}); "
            f"need gamma <= {bound:.6g}"
        )
    prizes[-1] = max(prizes[-1], 0.0)
    return RewardSchedule(tuple(prizes), sigma, f"arithmetic:{gamma:g}")


def make_geometric(K: int, eta: float, sigma: float = 1.0) -> RewardSchedule:
    """Prizes shrinking by a constant ratio ``eta``."""
    _check_args(K, sigma)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if eta == 1.0:
        sched = make_homogeneous(K, sigma)
        return RewardSchedule(sched.prizes, sigma, "geometric:1")
    first = sigma * (1.0 - eta) / (1.0 - eta**K)
    prizes = [first * eta ** (k - 1) for k in range(1, K + 1)]
    return RewardSchedule(tuple(prizes), sigma, f"geometric:{eta:g}")


def _check_args(K, sigma):
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")


def validate(schedule: RewardSchedule, tol: float = BUDGET_TOL) -> str | None:
    """Return ``None`` if the schedule is well formed, else the first violation."""
    p = schedule.prizes
    if len(p) < 1:
        return "empty schedule: need at least one prize"
    for k, m in enumerate(p, start=1):
        if m < 0:
            return f"nonnegativity violation: M_{k} = {m} < 0"
    for k in range(1, len(p)):
        if p[k] > p[k - 1] + tol:
            return f"ordering violation: M_{k + 1} = {p[k]} exceeds M_{k} = {p[k - 1]}"
    total = float(np.sum(p))
    if abs(total - schedule.sigma) > tol * max(1.0, abs(schedule.sigma)):
        return f"budget violation: prizes sum to {total:.12g}, budget is {schedule.sigma:.12g}"
    return None


def parse_structure(text: str, K: int, sigma: float = 1.0) -> RewardSchedule:
    """Build a schedule from ``single``, ``homogeneous``, ``arithmetic:<g>`` or ``geometric:<e>``."""
    name, _, arg = text.strip().partition(":")
    name = name.lower()
    if name in ("single", "homogeneous"):
        if arg:
            raise ValueError(f"structure {name!r} takes no parameter")
        return make_single(K, sigma) if name == "single" else make_homogeneous(K, sigma)
    if name in ("arithmetic", "geometric"):
        if not arg:
            raise ValueError(f"structure {name!r} needs a parameter, e.g. {name}:0.05")
        try:
            value = float(arg)
        except ValueError:
            raise ValueError(f"bad parameter {arg!r} for structure {name!r}") from None
        if name == "arithmetic":
            return make_arithmetic(K, value, sigma)
        return make_geometric(K, value, sigma)
    raise ValueError(
        f"unknown structure {text!r}; expected single, homogeneous, arithmetic:<gamma> or geometric:<eta>"
    )
