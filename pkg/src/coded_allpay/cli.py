"""Command line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 domain error
(for example, too many stragglers to decode).
"""
from __future__ import annotations

import argparse
import sys
import time

from .auction import DEFAULT_GRID
from .experiments import (
    PRESETS,
    ConfigError,
    ScenarioConfig,
    SweepSpec,
    load_scenario,
    run_bid_curve,
    run_coded_demo,
    run_figures,
    run_reward_compare,
    run_simulate,
)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _shared(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON scenario file; flags given explicitly override it")
    p.add_argument("--workers", type=_int_list, help="number of workers I (comma list sweeps)")
    p.add_argument("--rewards", type=_int_list, help="number of prizes K (comma list sweeps)")
    p.add_argument("--structure", action="append",
                   help="single | homogeneous | arithmetic:<gamma> | geometric:<eta> (repeatable)")
    p.add_argument("--sigma", type=float, help="total prize budget")
    p.add_argument("--theta", type=float, help="unit energy cost")
    p.add_argument("--kappa", type=float, help="effective switch coefficient")
    p.add_argument("--cycles", type=float, help="CPU cycles per subtask")
    p.add_argument("--cost-mode", choices=("table1", "normalized"))
    p.add_argument("--grid", type=int, help=f"quadrature knots (default {DEFAULT_GRID})")
    p.add_argument("--points", type=int, help="valuations per output curve (default 101)")
    p.add_argument("--rounds", type=int, help="Monte Carlo rounds")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output CSV path (stdout when omitted)")
    p.add_argument("--svg", help="output SVG path")


def _scenario(args) -> ScenarioConfig:
    sc = load_scenario(args.config) if getattr(args, "config", None) else ScenarioConfig()
    if args.workers:
        sc.workers = args.workers[0]
        sc.sweep.workers = args.workers
    if args.rewards:
        sc.rewards = args.rewards[0]
        sc.sweep.rewards = args.rewards
    if args.structure:
        sc.structure = args.structure[0]
        sc.sweep.structures = args.structure
    for key in ("sigma", "theta", "kappa", "cycles", "grid", "points", "rounds", "seed",
                "out", "svg"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(sc, key, v)
    if args.cost_mode:
        sc.cost_mode = args.cost_mode
    return sc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coded-allpay",
                     description="Coded matrix multiplication with an all-pay CPU-power auction.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bid-curve", help="equilibrium bid against valuation")
    _shared(p)

    p = sub.add_parser("reward-compare", help="compare reward structures for one contest")
    _shared(p)

    p = sub.add_parser("coded-demo", help="encode, drop stragglers, decode, verify")
    p.add_argument("-m", type=int, default=2, help="column blocks of A")
    p.add_argument("-n", type=int, default=2, help="column blocks of B")
    p.add_argument("--workers", type=int, default=6)
    p.add_argument("--modulus", "-q", type=int, default=65537)
    p.add_argument("--shape", type=_int_list, default=[4, 4, 4], metavar="S,R,T",
                   help="A is SxR and B is SxT")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--stragglers", type=int, help="number of random stragglers")
    g.add_argument("--straggler-ids", type=_int_list, help="explicit straggler worker ids")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", help="Monte Carlo rounds from a JSON scenario")
    p.add_argument("config", help="JSON scenario file")
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="per-round CSV (summary goes next to it)")
    p.add_argument("--summary", help="summary CSV path")

    p = sub.add_parser("figures", help="regenerate the preset bid-curve figures")
    p.add_argument("--preset", default="all", choices=sorted(PRESETS) + ["all"])
    p.add_argument("--out", default="figures", help="output directory")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_bid_curve(args):
    sc = _scenario(args)
    csv = run_bid_curve(sc)
    if sc.out is None:
        sys.stdout.write(csv)


def _cmd_reward_compare(args):
    sc = _scenario(args)
    structures = sc.sweep.structures or []
    if not structures:
        raise ConfigError("reward-compare needs at least one --structure")
    csv = run_reward_compare(sc, structures)
    if sc.out is None:
        sys.stdout.write(csv)


def _cmd_coded_demo(args):
    if len(args.shape) != 3:
        raise ConfigError("--shape needs three integers S,R,T")
    s, r, t = args.shape
    stragglers = args.straggler_ids if args.straggler_ids is not None else args.stragglers
    sys.stdout.write(run_coded_demo(args.m, args.n, args.workers, args.modulus, s, r, t,
                                    stragglers, args.seed))


def _cmd_simulate(args):
    sc = load_scenario(args.config)
    for key in ("rounds", "seed", "out"):
        v = getattr(args, key)
        if v is not None:
            setattr(sc, key, v)
    rows, summary = run_simulate(sc, summary_out=args.summary)
    if sc.out is None:
        sys.stdout.write(rows)
    if sc.out is None or args.summary is None:
        sys.stdout.write(summary)


def _cmd_figures(args):
    start = time.perf_counter()
    paths = run_figures(args.preset, args.out, args.grid, args.seed, args.points)
    for p in paths:
        print(p)
    print(f"wrote {len(paths)} files in {time.perf_counter() - start:.2f}s", file=sys.stderr)


COMMANDS = {
    "bid-curve": _cmd_bid_curve,
    "reward-compare": _cmd_reward_compare,
    "coded-demo": _cmd_coded_demo,
    "simulate": _cmd_simulate,
    "figures": _cmd_figures,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ZeroDivisionError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
