"""Command line interface.

One subcommand per registered experiment plus `simulate` (single trial
with a verbose event trace) and `sweep` (grid run from a config file).
Exit codes: 0 success, 2 validation error, 3 partial failure (some
sweep cells failed).
"""

from __future__ import annotations

import argparse
import sys
from typing import Dict, List, Optional

from .engine import Caps, EventKind, init_trial, process_next_event
from .field import RandomField
from .harness import (
    EXPERIMENTS,
    SweepSpec,
    _fmt,
    parse_caps,
    read_config,
    run_sweep,
    sweep_from_config,
)
from .model import ClockMode, ConfigurationError, ModelParams, Topology, Truncation

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (default 0)")
    parser.add_argument("--trials", type=int, default=None,
                        help="trials per cell (default 100)")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes (default 1)")
    parser.add_argument("--out", type=str, default=None,
                        help="CSV output path; stdout key=value lines if omitted")
    parser.add_argument("--config", type=str, default=None,
                        help="key=value config file; CLI flags override it")
    parser.add_argument("--caps", type=str, default=None,
                        help="max_sites=N,max_events=N,horizon=T")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convfpp",
        description="Two-type first passage percolation with conversion: "
                    "simulation and estimation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one trial with an event trace")
    sim.add_argument("--topology", choices=("tree", "lattice"), default="lattice")
    sim.add_argument("--d", type=int, required=True)
    sim.add_argument("--lam", type=float, required=True)
    sim.add_argument("--rho", type=float, required=True)
    sim.add_argument("--target", type=int, required=True,
                     help="survival depth (tree) or box radius (lattice)")
    sim.add_argument("--clock-mode", choices=("static", "resample"),
                     default="static")
    sim.add_argument("--trunc-q", type=float, default=None)
    sim.add_argument("--trunc-K", type=float, default=None)
    sim.add_argument("--trial", type=int, default=0)
    sim.add_argument("--max-print", type=int, default=200,
                     help="print at most this many events")
    _add_common(sim)

    swp = sub.add_parser("sweep", help="run a sweep from a config file")
    swp.add_argument("spec", help="key=value sweep specification file")
    _add_common(swp)

    for name, exp in EXPERIMENTS.items():
        ep = sub.add_parser(name, help=f"run the {name} experiment")
        for p in exp.params:
            ep.add_argument(f"--{p.name.replace('_', '-')}", dest=p.name,
                            action="append", default=None, metavar="V",
                            help="repeat for a grid axis")
        _add_common(ep)
    return parser


def _simulate(args) -> int:
    trunc = None
    if args.trunc_q is not None:
        trunc = Truncation(q=args.trunc_q, K=args.trunc_K)
    params = ModelParams(d=args.d, lam=args.lam, rho=args.rho,
                         topology=Topology(args.topology),
                         clock_mode=ClockMode(args.clock_mode),
                         truncation=trunc)
    caps = parse_caps(args.caps)
    seed = args.seed if args.seed is not None else 0
    field = RandomField(params, seed, args.trial)
    state = init_trial(params, field, args.target, caps)
    printed = 0
    from .engine import Verdict
    while state.verdict is None:
        if not state.queue:
            state.verdict = Verdict.EXTINCT
            state.stop_time = state.clock
            break
        if (state.events_processed >= caps.max_events
                or state.n_occupied >= caps.max_sites):
            state.verdict = Verdict.CAPPED
            state.stop_time = state.clock
            break
        if state.queue[0][0] > caps.horizon:
            state.verdict = Verdict.CAPPED
            state.stop_time = caps.horizon
            break
        t, kind, target, source, _ = state.queue[0]
        effect = process_next_event(state)
        if printed < args.max_print:
            print(f"t={t:.6f} {EventKind(kind).name.lower()} "
                  f"target={target} source={source} -> {effect}")
            printed += 1
            if printed == args.max_print:
                print("... trace truncated ...")
        if state.verdict is None and state.n_type1 == 0:
            state.verdict = Verdict.EXTINCT
            state.stop_time = state.clock
    print(f"verdict={state.verdict.value}")
    print(f"stop_time={state.stop_time:.17g}")
    print(f"max_reach={state.max_reach}")
    print(f"events={state.events_processed}")
    print(f"conversions={state.conversions}")
    print(f"occupied={state.n_occupied}")
    return EXIT_OK


def _overrides_from_args(args, grid: Optional[Dict[str, List[str]]] = None) -> dict:
    return {
        "trials": args.trials,
        "master_seed": args.seed,
        "workers": args.workers,
        "out": args.out,
        "caps": parse_caps(args.caps) if args.caps else None,
        "grid": grid,
    }


def _print_rows(result) -> None:
    for row in result.rows:
        print(" ".join(f"{col}={_fmt(row.get(col))}" for col in result.columns))


def _run_spec(spec: SweepSpec) -> int:
    result = run_sweep(spec)
    if spec.out is None:
        _print_rows(result)
    else:
        print(f"wrote {len(result.rows)} rows to {spec.out}")
    if result.failed_cells:
        print(f"failed cells: {result.failed_cells}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "simulate":
            return _simulate(args)
        if args.command == "sweep":
            cfg = read_config(args.spec)
            spec = sweep_from_config(cfg, **_overrides_from_args(args))
            return _run_spec(spec)
        exp = EXPERIMENTS[args.command]
        cfg = read_config(args.config) if args.config else {}
        grid = {p.name: getattr(args, p.name) for p in exp.params
                if getattr(args, p.name) is not None}
        spec = sweep_from_config(
            cfg, experiment=args.command,
            **_overrides_from_args(args, grid=grid))
        return _run_spec(spec)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
