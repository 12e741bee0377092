"""Command-line front end.

    szolp run --problem qp-corner --eps-min 1e-6
    szolp run --case case30.m --M 0.13 --L 0.5 --k-switch 200
    szolp check --suite lp --seed 7

Exit codes: 0 success, 1 solver error, 2 bad flags, 3 unreadable or invalid
case, 4 iteration cap reached before eps_min, 5 infeasible start, 6 a
check suite failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .checks import SUITES, run_suite
from .oracle import Problem
from .powerflow import CaseError, builtin_case, load_case
from .powerflow.opf import DEFAULT_L, DEFAULT_M, DEFAULT_SCALE, opf_problem
from .problems import REGISTRY, get_problem
from .solver import InfeasibleStartError, SolverConfig, run, write_trace

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_CASE, EXIT_MAX_ITERS, EXIT_INFEASIBLE, EXIT_CHECK = range(7)

TRACE_DIR_ENV = "SZOLP_TRACE_DIR"


class UsageError(Exception):
    pass


def _constants(text: str | None, m1: int, what: str):
    """Parse a scalar or a comma-separated per-function vector of length m+1."""
    if text is None:
        return None
    try:
        vals = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"--{what} must be a number or a comma-separated list") from None
    if vals.size not in (1, m1):
        raise UsageError(f"--{what} needs 1 or {m1} values, got {vals.size}")
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise UsageError(f"--{what} values must be positive and finite")
    return vals


def _load_grid(spec: str):
    path = Path(spec)
    if path.exists():
        return load_case(path)
    try:
        return builtin_case(path.stem)
    except FileNotFoundError:
        raise CaseError(f"cannot read case file {spec}: no such file or built-in case") from None


def build_problem(args) -> Problem:
    if args.case:
        case = _load_grid(args.case)
        prob = opf_problem(case, L=DEFAULT_L, M=DEFAULT_M, scale=args.scale,
                           q_limits=args.q_limits)
    else:
        try:
            prob = get_problem(args.problem)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    m1 = prob.n_constraints + 1
    L = _constants(args.L, m1, "L")
    M = _constants(args.M, m1, "M")
    if L is not None:
        prob.L = np.broadcast_to(L, (m1,)).copy()
    if M is not None:
        prob.M = np.broadcast_to(M, (m1,)).copy()
    return prob


def _trace_path(args, name: str) -> Path:
    if args.trace_out:
        return Path(args.trace_out)
    return Path(os.environ.get(TRACE_DIR_ENV, ".")) / f"{name}.{args.format}"


def run_command(args) -> int:
    try:
        config = SolverConfig(eps0=args.eps0, eps_min=args.eps_min, k_switch=args.k_switch,
                              max_iterations=args.max_iters, bisection=args.bisection,
                              strict=not args.lenient)
        prob = build_problem(args)
    except CaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CASE
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    lp_dump = open(args.lp_debug, "w") if args.lp_debug else None
    try:
        res = run(prob, config=config, lp_dump=lp_dump)
    except InfeasibleStartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    finally:
        if lp_dump is not None:
            lp_dump.close()

    path = _trace_path(args, prob.name)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        write_trace(res.trace, fh, args.format)
    summary = res.summary()
    summary.update(problem=prob.name, trace=str(path), d=prob.dimension, m=prob.n_constraints)
    if args.summary_out:
        Path(args.summary_out).write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    if res.reason == "error":
        return EXIT_ERROR
    if res.reason == "max_iters":
        return EXIT_MAX_ITERS
    return EXIT_OK


def check_command(args) -> int:
    names = SUITES if args.suite == "all" else (args.suite,)
    ok = True
    for name in names:
        rep = run_suite(name, args.seed)
        print(rep)
        ok &= rep.passed
    return EXIT_OK if ok else EXIT_CHECK


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="szolp", description="Safe zeroth-order optimization")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the solver on a problem or power grid case")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", help=f"built-in problem: {', '.join(sorted(REGISTRY))}")
    src.add_argument("--case", help="Matpower case file (or a built-in case name, e.g. case30)")
    r.add_argument("--eps0", type=float, default=0.05)
    r.add_argument("--eps-min", type=float, default=1e-6)
    r.add_argument("--k-switch", type=_positive_int, default=200)
    r.add_argument("--max-iters", type=_positive_int, default=10_000)
    r.add_argument("--M", help="smoothness constant(s): scalar or m+1 comma-separated values")
    r.add_argument("--L", help="Lipschitz constant(s): scalar or m+1 comma-separated values")
    r.add_argument("--scale", type=float, default=DEFAULT_SCALE,
                   help="OPF units as multiples of per unit (100: MW and percent voltage)")
    r.add_argument("--q-limits", action="store_true",
                   help="add generator reactive-power bounds to the OPF constraints")
    r.add_argument("--bisection", action="store_true", help="bisection for the local-set step")
    r.add_argument("--lenient", action="store_true",
                   help="record invariant violations instead of stopping")
    r.add_argument("--trace-out", help=f"trace path (default: ${TRACE_DIR_ENV}/<problem>.<fmt>)")
    r.add_argument("--summary-out", help="also write the JSON summary here")
    r.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    r.add_argument("--seed", type=int, default=0, help="unused by the deterministic solver")
    r.add_argument("--lp-debug", help="dump every simplex tableau to this file")
    r.set_defaults(func=run_command)

    c = sub.add_parser("check", help="run a property suite")
    c.add_argument("--suite", choices=SUITES + ("all",), default="all")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=check_command)
    return p


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
