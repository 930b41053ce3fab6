"""Command line front end: one subcommand per experiment protocol.

Exit codes: 0 success, 2 usage or validation error, 3 when a population
size search hit its cap without reaching the target.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional, Sequence, Tuple

from .engine import RunConfig, Tournament, run
from .harness import (ExperimentConfig, MinPopResult, gamma_sweep,
                      mahfoud_model, min_population_profile, verify_frequencies,
                      write_freq_csv, write_frequency_trace_csv,
                      write_gamma_csv, write_minpop_csv, write_run_trace_csv)
from .niching import RtsConfig
from .problems import ProblemSpec, enumerate_optima

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SATURATED = 3

PROBLEM_TOKENS = {"trap": "standard", "mtrap": "modified", "bipolar": "bipolar"}
DEFAULT_GRID = "125,250,500,1000,2000"


def _int_list(text: str) -> Tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", choices=sorted(PROBLEM_TOKENS), default="mtrap",
                   help="trap family (default: mtrap)")
    p.add_argument("--m", type=int, default=5, help="number of blocks (default: 5)")
    p.add_argument("--k", type=int, default=4, help="bits per block (default: 4)")


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=7, help="master seed (default: 7)")
    p.add_argument("--runs", type=int, default=50, help="ensemble size (default: 50)")
    p.add_argument("--out", help="output CSV path")


def _add_rts_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rts-window", type=int, default=None,
                   help="crowding window size (default: genome length)")
    p.add_argument("--rts-ties", choices=("replace", "keep"), default="replace",
                   help="offspring matching the incumbent's fitness replace it or not")


def _problem(args) -> ProblemSpec:
    return ProblemSpec(PROBLEM_TOKENS[args.problem], args.m, args.k)


def _rts(args, problem: ProblemSpec) -> RtsConfig:
    window = args.rts_window if args.rts_window is not None else problem.length
    return RtsConfig(window=window, replace_on_tie=args.rts_ties == "replace")


def _algos(token: str) -> Tuple[str, ...]:
    return ("subniche", "rts") if token == "both" else (token,)


def _cmd_run(args) -> int:
    problem = _problem(args)
    config = RunConfig(problem, args.algo, args.pop, args.gens, args.seed,
                       selection=Tournament(2), rts=_rts(args, problem),
                       record_interval=args.record_every, init=args.init)
    trace = run(config)
    if args.dump_models:
        for g, sig in zip(trace.generations, trace.partitions):
            if sig:
                print(f"gen={int(g)} groups={sig}")
    if args.out:
        write_run_trace_csv(args.out, trace)
    final = trace.generations[-1]
    print(f"generation {int(final)}: {trace.distinct_at(int(final))} distinct optima, "
          f"best fitness {trace.best_fitness[-1]:g}")
    return EXIT_OK


def _cmd_verify_frequencies(args) -> int:
    report = verify_frequencies(_problem(args), runs=args.runs,
                                generations=args.gens, warmup=args.warmup,
                                sample_size=args.sample, seed=args.seed)
    if args.out:
        write_freq_csv(args.out, report)
    if args.trace_out:
        write_frequency_trace_csv(args.trace_out, report)
    print(f"largest |experimental - ideal| over {len(report.rows)} schemata: "
          f"{report.max_abs_error():.5f}")
    return EXIT_OK


def _experiment(args, algo: str, required: Optional[int],
                checkpoints: Tuple[int, ...], grid: Tuple[int, ...],
                cap: Optional[int] = None) -> ExperimentConfig:
    problem = _problem(args)
    base = RunConfig(problem, algo, 2, 0, args.seed, selection=Tournament(2),
                     rts=_rts(args, problem), init=args.init)
    kwargs = dict(runs=args.runs, checkpoints=checkpoints, required=required,
                  grid=grid)
    if cap is not None:
        kwargs["max_population"] = cap
    return ExperimentConfig(base, **kwargs)


def _cmd_gamma_sweep(args) -> int:
    results = []
    for algo in _algos(args.algo):
        cfg = _experiment(args, algo, args.required, args.checkpoints, args.grid)
        results.append(gamma_sweep(cfg))
    if args.out:
        write_gamma_csv(args.out, results)
    for result in results:
        for c in result.cells:
            print(f"{c.algo} n={c.population_size} t={c.checkpoint} "
                  f"gamma={c.gamma:.3f} +/- {c.stderr:.3f}")
    return EXIT_OK


def _cmd_min_pop(args) -> int:
    catalog = enumerate_optima(_problem(args))
    required = args.required if args.required is not None else catalog.count - 1
    target = args.target if args.target is not None else required / (required + 1)
    results: List[MinPopResult] = []
    for algo in _algos(args.algo):
        cfg = _experiment(args, algo, required, (max(args.t),), (16,),
                          cap=args.cap)
        profile = min_population_profile(cfg, target, args.t)
        results.extend(profile[t] for t in sorted(profile))
    if args.out:
        write_minpop_csv(args.out, results)
    saturated = False
    for r in results:
        shown = "saturated" if r.n_min is None else str(r.n_min)
        print(f"{r.algo} n_opt={r.n_opt} t={r.checkpoint} target={r.target:.4f} "
              f"n_min={shown}")
        saturated = saturated or r.saturated
    return EXIT_SATURATED if saturated else EXIT_OK


def _cmd_mahfoud(args) -> int:
    value = mahfoud_model(args.n_opt, args.gamma, args.t)
    print(f"{value:.10g}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(f"{value:.10g}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subniche",
        description="Niche-preserving model-building GA experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single run, share trajectory to CSV")
    _add_problem_args(p)
    _add_common_args(p)
    _add_rts_args(p)
    p.add_argument("--algo", choices=("subniche", "rts"), required=True)
    p.add_argument("--pop", type=int, required=True, help="population size")
    p.add_argument("--gens", type=int, required=True, help="generations to run")
    p.add_argument("--record-every", type=int, default=1, metavar="G",
                   help="record every G-th generation (default: 1)")
    p.add_argument("--init", choices=("random", "optima"), default="random",
                   help="starting population layout (default: random)")
    p.add_argument("--dump-models", action="store_true",
                   help="print the learned partition each recorded generation")
    p.set_defaults(handler=_cmd_run)

    p = sub.add_parser("verify-frequencies",
                       help="measured vs ideal schema sampling frequencies")
    _add_problem_args(p)
    _add_common_args(p)
    p.add_argument("--gens", type=int, default=100, help="generations (default: 100)")
    p.add_argument("--warmup", type=int, default=20,
                   help="first generation included in the time average (default: 20)")
    p.add_argument("--sample", type=int, default=5000,
                   help="reference population size per generation (default: 5000)")
    p.add_argument("--trace-out", help="optional CSV for the first block's trajectory")
    p.set_defaults(handler=_cmd_verify_frequencies)

    p = sub.add_parser("gamma-sweep",
                       help="retention probability over a population grid")
    _add_problem_args(p)
    _add_common_args(p)
    _add_rts_args(p)
    p.add_argument("--algo", choices=("subniche", "rts", "both"), default="both")
    p.add_argument("--grid", type=_int_list, default=_int_list(DEFAULT_GRID),
                   help=f"population sizes (default: {DEFAULT_GRID})")
    p.add_argument("--checkpoints", type=_int_list, default=(100, 500),
                   help="generation checkpoints (default: 100,500)")
    p.add_argument("--required", type=int, default=None,
                   help="distinct optima needed for success (default: all)")
    p.add_argument("--init", choices=("random", "optima"), default="optima",
                   help="starting population layout (default: optima)")
    p.set_defaults(handler=_cmd_gamma_sweep)

    p = sub.add_parser("min-pop",
                       help="smallest population reaching a target retention")
    _add_problem_args(p)
    _add_common_args(p)
    _add_rts_args(p)
    p.add_argument("--algo", choices=("subniche", "rts", "both"), default="both")
    p.add_argument("--t", type=_int_list, default=(100,),
                   help="generation horizons (default: 100)")
    p.add_argument("--target", type=float, default=None,
                   help="retention target (default: required/(required+1))")
    p.add_argument("--required", type=int, default=None,
                   help="distinct optima needed (default: all but one)")
    p.add_argument("--cap", type=int, default=1 << 20,
                   help="search gives up above this size (default: 2^20)")
    p.add_argument("--init", choices=("random", "optima"), default="optima",
                   help="starting population layout (default: optima)")
    p.set_defaults(handler=_cmd_min_pop)

    p = sub.add_parser("mahfoud", help="drift population-sizing estimate")
    p.add_argument("--n-opt", type=int, required=True, help="niche count")
    p.add_argument("--gamma", type=float, required=True,
                   help="survival probability over the horizon")
    p.add_argument("--t", type=int, required=True, help="horizon in generations")
    p.add_argument("--out", help="also write the value to this file")
    p.set_defaults(handler=_cmd_mahfoud)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
