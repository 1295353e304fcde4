"""Scenario configs, parameter sweeps and CSV/SVG writers behind the CLI."""
from __future__ import annotations

import dataclasses
import io
import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import coded_matmul as cm
from .auction import (
    DEFAULT_GRID,
    AuctionConfig,
    CostModel,
    master_utility_order_stats,
    master_utility_simplified,
    monte_carlo_master_utility,
    tabulate_bid_function,
    top_bid_bound,
    wta_local_test,
)
from .finite_field import PrimeField
from .order_stats import make_distribution
from .plotting import line_chart
from .reward_structures import parse_structure
from .straggler_sim import CompletionModel, simulate_batch

BID_UNITS = "CPU power (model units)"


class ConfigError(ValueError):
    """Malformed or inconsistent scenario settings (CLI exit code 1)."""


@dataclass
class ValuationSpec:
    kind: str = "uniform"
    lo: float = 0.0
    hi: float = 1.0


@dataclass
class SweepSpec:
    workers: list[int] | None = None
    rewards: list[int] | None = None
    structures: list[str] | None = None


@dataclass
class ScenarioConfig:
    """Everything needed to run one experiment; JSON-serializable."""

    workers: int = 5
    structure: str = "single"
    rewards: int | None = None
    sigma: float = 1.0
    cost_mode: str = "normalized"
    theta: float | None = None
    kappa: float | None = None
    cycles: float | None = None
    valuation: ValuationSpec = field(default_factory=ValuationSpec)
    grid: int = DEFAULT_GRID
    points: int = 101
    seed: int = 0
    rounds: int = 10_000
    delay: float = 0.0
    sweep: SweepSpec = field(default_factory=SweepSpec)
    out: str | None = None
    svg: str | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def cost_model(self) -> CostModel:
        if self.cost_mode not in ("normalized", "table1"):
            raise ConfigError(f"cost_mode must be 'normalized' or 'table1', got {self.cost_mode!r}")
        base = CostModel.table1() if self.cost_mode == "table1" else CostModel.normalized()
        try:
            return CostModel(
                theta=base.theta if self.theta is None else float(self.theta),
                kappa=base.kappa if self.kappa is None else float(self.kappa),
                cycles=base.cycles if self.cycles is None else float(self.cycles),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def cells(self) -> list["Cell"]:
        """Expand the sweep lists into validated auction configs."""
        if self.grid < 2:
            raise ConfigError(f"grid must be at least 2, got {self.grid}")
        workers = self.sweep.workers or [self.workers]
        structures = self.sweep.structures or [self.structure]
        rewards = self.sweep.rewards or [self.rewards]
        if not (workers and structures and rewards):
            raise ConfigError("sweep lists must not be empty")
        cost = self.cost_model()
        try:
            dist = make_distribution(self.valuation.kind, self.valuation.lo, self.valuation.hi)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        out = []
        for I, s, K in itertools.product(workers, structures, rewards):
            if K is None:
                K = 1 if s.strip().lower() == "single" else min(4, I)
            try:
                schedule = parse_structure(s, K, self.sigma)
                config = AuctionConfig(I, schedule, dist, cost)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"cell (workers={I}, structure={s}, rewards={K}): {exc}") from None
            out.append(Cell(len(out), f"I={I} K={K} {schedule.label}", config))
        return out


@dataclass(frozen=True)
class Cell:
    index: int
    label: str
    config: AuctionConfig


def _reject_unknown(data: dict, cls, where: str, text: str | None, path: str):
    allowed = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in allowed:
            line = _line_of(text, key)
            loc = f"{path}:{line}: " if line else f"{path}: "
            raise ConfigError(f"{loc}unknown key {key!r} in {where}; allowed: {sorted(allowed)}")


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def scenario_from_dict(data: dict, text: str | None = None, path: str = "<config>") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    _reject_unknown(data, ScenarioConfig, "scenario", text, path)
    data = dict(data)
    if "valuation" in data:
        if not isinstance(data["valuation"], dict):
            raise ConfigError(f"{path}: 'valuation' must be an object")
        _reject_unknown(data["valuation"], ValuationSpec, "valuation", text, path)
        data["valuation"] = ValuationSpec(**data["valuation"])
    if "sweep" in data:
        if not isinstance(data["sweep"], dict):
            raise ConfigError(f"{path}: 'sweep' must be an object")
        _reject_unknown(data["sweep"], SweepSpec, "sweep", text, path)
        data["sweep"] = SweepSpec(**data["sweep"])
    scenario = ScenarioConfig(**data)
    _check_types(scenario, text, path)
    return scenario


def _check_types(s: ScenarioConfig, text, path):
    def bad(key, expect):
        line = _line_of(text, key)
        loc = f"{path}:{line}: " if line else f"{path}: "
        raise ConfigError(f"{loc}{key!r} must be {expect}")

    for key in ("workers", "grid", "points", "seed", "rounds"):
        v = getattr(s, key)
        if isinstance(v, bool) or not isinstance(v, int):
            bad(key, "an integer")
    if s.rewards is not None and (isinstance(s.rewards, bool) or not isinstance(s.rewards, int)):
        bad("rewards", "an integer or null")
    for key in ("sigma", "delay"):
        v = getattr(s, key)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            bad(key, "a number")
    if not isinstance(s.structure, str):
        bad("structure", "a string")
    if s.points < 2:
        bad("points", "at least 2")
    if s.rounds < 1:
        bad("rounds", "at least 1")


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    try:
        return scenario_from_dict(data, text, path)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _num(x: float) -> str:
    return f"{float(x):.10g}"


def _header(kind: str, scenario: ScenarioConfig, extra: dict | None = None) -> str:
    lines = [f"# coded-allpay {kind}",
             "# config: " + json.dumps(scenario.to_dict(), sort_keys=True)]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}: {v}")
    return "\n".join(lines) + "\n"


def _write(path, content: str):
    if path is None:
        return
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    # newline="" keeps bytes identical across platforms
    with open(p, "w", newline="") as fh:
        fh.write(content)


def bid_curves(scenario: ScenarioConfig):
    """Per-cell ``(cell, valuations, bids)`` sampled at ``scenario.points`` valuations."""
    out = []
    for cell in scenario.cells():
        bids = tabulate_bid_function(cell.config, scenario.grid)
        lo, hi = cell.config.dist.support
        v = np.linspace(lo, hi, scenario.points)
        z = bids(v)
        if np.any(np.diff(z) < 0):
            raise RuntimeError(f"bid curve for {cell.label} is not monotone")
        out.append((cell, v, z))
    return out


def run_bid_curve(scenario: ScenarioConfig, out=None, svg=None, title: str = "") -> str:
    """CSV (and optional SVG) of equilibrium bids against valuation, one series per cell."""
    curves = bid_curves(scenario)
    cost = scenario.cost_model()
    buf = io.StringIO()
    buf.write(_header("bid-curve", scenario, {
        "cost_scale": f"theta*kappa*a = {_num(cost.scale)}",
        "bid_units": BID_UNITS,
    }))
    buf.write("series,workers,rewards,structure,valuation,bid\n")
    for cell, v, z in curves:
        c = cell.config
        for vi, zi in zip(v, z):
            buf.write(f"{cell.label},{c.workers},{c.K},{c.schedule.label},{_num(vi)},{_num(zi)}\n")
    csv = buf.getvalue()
    _write(out if out is not None else scenario.out, csv)
    svg_path = svg if svg is not None else scenario.svg
    if svg_path is not None:
        doc = line_chart([(cell.label, v, z) for cell, v, z in curves],
                         title=title or f"Equilibrium bids ({scenario.cost_mode} cost)",
                         xlabel="valuation", ylabel=BID_UNITS)
        _write(svg_path, doc)
    return csv


REWARD_COLUMNS = (
    "structure", "workers", "rewards", "sigma", "prizes", "top_bid", "top_bid_bound",
    "pi_order_stats", "pi_simplified", "pi_monte_carlo", "pi_monte_carlo_stderr",
    "mc_within_3se", "wta_step", "wta_differences", "wta_condition",
)


def reward_compare_rows(scenario: ScenarioConfig, structures: list[str]) -> list[dict]:
    if not structures:
        raise ConfigError("reward-compare needs at least one structure")
    base = dataclasses.replace(
        scenario, sweep=SweepSpec(workers=[scenario.workers], rewards=[scenario.rewards],
                                  structures=list(structures)))
    rows = []
    for cell in base.cells():
        c = cell.config
        bids = tabulate_bid_function(c, scenario.grid)
        pi = master_utility_order_stats(c, bids, scenario.grid - 1)
        mc, se = monte_carlo_master_utility(c, bids, scenario.rounds, (scenario.seed, cell.index))
        if c.K >= 2:
            wta = wta_local_test(c, grid_size=scenario.grid, intervals=scenario.grid - 1)
            wta_diffs = ";".join(_num(d) for d in wta.differences)
            wta_cond = ";".join(str(b).lower() for b in wta.condition)
            wta_step = _num(wta.step)
        else:
            wta_diffs = wta_cond = wta_step = ""
        rows.append(dict(
            structure=c.schedule.label,
            workers=c.workers,
            rewards=c.K,
            sigma=_num(c.sigma),
            prizes=";".join(_num(p) for p in c.schedule.prizes),
            top_bid=_num(bids.max_bid),
            top_bid_bound=_num(top_bid_bound(c)),
            pi_order_stats=_num(pi),
            pi_simplified=_num(master_utility_simplified(c, bids, intervals=scenario.grid - 1)),
            pi_monte_carlo=_num(mc),
            pi_monte_carlo_stderr=_num(se),
            mc_within_3se=str(abs(mc - pi) <= 3 * se).lower(),
            wta_step=wta_step,
            wta_differences=wta_diffs,
            wta_condition=wta_cond,
        ))
    return rows


def run_reward_compare(scenario: ScenarioConfig, structures: list[str], out=None) -> str:
    rows = reward_compare_rows(scenario, structures)
    buf = io.StringIO()
    buf.write(_header("reward-compare", scenario, {
        "structures": ",".join(structures),
        "pi_order_stats": "sum of top-K expected bids minus sigma (quadrature)",
        "pi_simplified": "K times the mean single bid (equals the order-stat sum only when K = I)",
        "wta_differences": "dpi/dM_{k-1} - dpi/dM_k for k = 2..K",
    }))
    buf.write(",".join(REWARD_COLUMNS) + "\n")
    for r in rows:
        buf.write(",".join(str(r[c]) for c in REWARD_COLUMNS) + "\n")
    csv = buf.getvalue()
    _write(out if out is not None else scenario.out, csv)
    return csv


def run_coded_demo(m: int = 2, n: int = 2, workers: int = 6, q: int = 65537,
                   s: int = 4, r: int = 4, t: int = 4, stragglers=None, seed: int = 0) -> str:
    """Encode random matrices, drop stragglers, decode, and check against direct AᵀB.

    ``stragglers`` is a count (chosen at random) or an explicit list of worker ids;
    by default up to two workers straggle, never more than the code tolerates.
    Raises ``NotDecodableError`` when too many results are withheld.
    """
    spec = cm.PartitionSpec(m, n)
    K = cm.recovery_threshold(spec)
    field_ = PrimeField(q)
    rng = np.random.default_rng(seed)
    A = cm.FieldMatrix.random(s, r, field_, rng)
    B = cm.FieldMatrix.random(s, t, field_, rng)
    if stragglers is None:
        stragglers = min(2, max(workers - K, 0))
    if isinstance(stragglers, int):
        if not 0 <= stragglers <= workers:
            raise ValueError(f"cannot pick {stragglers} stragglers among {workers} workers")
        ids = sorted(int(i) for i in rng.choice(np.arange(1, workers + 1), stragglers, replace=False))
    else:
        ids = sorted(int(i) for i in stragglers)
    C = cm.end_to_end(A, B, spec, workers, q, ids)
    ok = C == (A.T @ B)
    lines = [
        f"field: F_{q}",
        f"A: {s}x{r}, B: {s}x{t}, m={m}, n={n}",
        f"recovery threshold K = m*n = {K}",
        f"workers: {workers}, stragglers: {ids}",
        f"results received: {workers - len(ids)}, used for decoding: {K}",
        f"decoded exactly: {str(ok).lower()}",
    ]
    return "\n".join(lines) + "\n"


SIM_COLUMNS = ("cell", "round", "coded_time", "uncoded_time", "speedup", "top_bid",
               "master_utility")
SUMMARY_COLUMNS = ("cell", "workers", "rewards", "structure", "rounds",
                   "mean_master_utility", "stderr_master_utility", "pi_order_stats",
                   "within_3se", "mean_coded_time", "mean_uncoded_time", "speedup",
                   "min_round_speedup")


def run_simulate(scenario: ScenarioConfig, out=None, summary_out=None) -> tuple[str, str]:
    """Per-round CSV plus a per-cell summary CSV comparing sampled and quadrature utility."""
    rows = io.StringIO()
    rows.write(_header("simulate", scenario, {
        "timing": "t = cycles / z + delay (plumbing model)",
        "bid_units": BID_UNITS,
    }))
    rows.write(",".join(SIM_COLUMNS) + "\n")
    summ = io.StringIO()
    summ.write(_header("simulate-summary", scenario))
    summ.write(",".join(SUMMARY_COLUMNS) + "\n")
    for cell in scenario.cells():
        c = cell.config
        bids = tabulate_bid_function(c, scenario.grid)
        model = CompletionModel(c.cost.cycles, scenario.delay)
        batch = simulate_batch(c, model, bids, scenario.rounds, (scenario.seed, cell.index))
        top = batch["bids"].max(axis=1)
        for i in range(scenario.rounds):
            rows.write(f"{cell.index},{i},{_num(batch['coded'][i])},{_num(batch['uncoded'][i])},"
                       f"{_num(batch['speedup'][i])},{_num(top[i])},"
                       f"{_num(batch['master_utility'][i])}\n")
        u = batch["master_utility"]
        mean = float(u.mean())
        se = float(u.std(ddof=1) / np.sqrt(len(u))) if len(u) > 1 else float("nan")
        pi = master_utility_order_stats(c, bids, scenario.grid - 1)
        mc_t, mu_t = float(batch["coded"].mean()), float(batch["uncoded"].mean())
        summ.write(",".join(str(x) for x in (
            cell.index, c.workers, c.K, c.schedule.label, scenario.rounds, _num(mean), _num(se),
            _num(pi), str(abs(mean - pi) <= 3 * se).lower(), _num(mc_t), _num(mu_t),
            _num(mu_t / mc_t), _num(batch["speedup"].min()),
        )) + "\n")
    rows_csv, summ_csv = rows.getvalue(), summ.getvalue()
    out = out if out is not None else scenario.out
    _write(out, rows_csv)
    if summary_out is None and out is not None:
        p = Path(out)
        summary_out = p.with_name(p.stem + "_summary" + (p.suffix or ".csv"))
    _write(summary_out, summ_csv)
    return rows_csv, summ_csv


PRESETS = {
    "fig1": dict(title="Single reward", structure="single", rewards=1, workers=[5, 15]),
    "fig2": dict(title="Geometric rewards, ratio 0.8", structure="geometric:0.8", rewards=4,
                 workers=[5, 15]),
    "fig3": dict(title="Arithmetic rewards, gap 0.05", structure="arithmetic:0.05", rewards=4,
                 workers=[5, 15]),
    "fig4": dict(title="Arithmetic rewards, gap 0.1", structure="arithmetic:0.1", rewards=4,
                 workers=[5, 15]),
    "fig5": dict(title="Arithmetic gap 0.05, I=10, K=3..5", structure="arithmetic:0.05",
                 rewards=[3, 4, 5], workers=[10]),
}


def preset_scenario(name: str, cost_mode: str, grid: int = DEFAULT_GRID, seed: int = 0,
                    points: int = 101) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)} or 'all'")
    p = PRESETS[name]
    rewards = p["rewards"] if isinstance(p["rewards"], list) else [p["rewards"]]
    return ScenarioConfig(
        workers=p["workers"][0], structure=p["structure"], rewards=rewards[0],
        cost_mode=cost_mode, grid=grid, seed=seed, points=points,
        sweep=SweepSpec(workers=list(p["workers"]), rewards=rewards,
                        structures=[p["structure"]]),
    )


def run_figures(preset: str, out_dir, grid: int = DEFAULT_GRID, seed: int = 0,
                points: int = 101) -> list[Path]:
    """Write ``<preset>_<cost_mode>.csv`` and ``.svg`` for each preset and both cost modes."""
    names = sorted(PRESETS) if preset == "all" else [preset]
    out_dir = Path(out_dir)
    written = []
    for name in names:
        for mode in ("normalized", "table1"):
            sc = preset_scenario(name, mode, grid, seed, points)
            csv_path = out_dir / f"{name}_{mode}.csv"
            svg_path = out_dir / f"{name}_{mode}.svg"
            run_bid_curve(sc, csv_path, svg_path,
                          title=f"{PRESETS[name]['title']} ({mode} cost)")
            written += [csv_path, svg_path]
    return written
