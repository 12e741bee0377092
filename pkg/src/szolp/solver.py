"""SZO-LP main loop.

Each pass tries, in order:

(a) doubling   LP at 2 eps passes the stronger test g0^T s <= -4 eps
(b) stepping   LP at eps passes g0^T s <= -2 eps; move along s by the
               better of the local-set step and gamma(eps) (only gamma
               once k >= K_switch)
(c) halving    otherwise

until eps <= eps_min.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import IO

import numpy as np
from scipy.optimize import nnls

from .gradient import DegenerateMarginError
from .localset import local_set_from_estimate, max_step
from .lp import LPNumericalError, lp_query
from .oracle import OracleError, Problem, SampleLedger, evaluate, is_strictly_feasible

log = logging.getLogger(__name__)

ACTIONS = ("doubled", "stepped-argmin", "stepped-gamma", "halved")


class InfeasibleStartError(ValueError):
    pass


class InvariantError(AssertionError):
    """A runtime guarantee of the method was violated (bad L/M constants?)."""


@dataclass(frozen=True)
class SolverConfig:
    eps0: float = 0.05
    eps_min: float = 1e-6
    k_switch: int = 200
    max_iterations: int = 10_000
    bisection: bool = False
    strict: bool = True

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if not 0 <= self.eps_min < self.eps0:
            raise ValueError("need 0 <= eps_min < eps0")
        if self.k_switch < 0:
            raise ValueError("k_switch must be non-negative")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")


@dataclass
class SolverState:
    k: int
    x: np.ndarray
    eps: float
    values: np.ndarray
    best_f0: float
    ledger: SampleLedger
    last_action: str | None = None

    @property
    def f0(self) -> float:
        return float(self.values[0])


@dataclass(frozen=True)
class IterationTrace:
    k: int
    eps: float
    action: str
    f0: float
    max_fi: float
    n_active: int
    pred_descent: float
    alpha: float
    samples: int
    seconds: float


TRACE_FIELDS = [f for f in IterationTrace.__dataclass_fields__]


@dataclass
class RunResult:
    x: np.ndarray
    f0: float
    trace: list[IterationTrace]
    ledger: SampleLedger
    reason: str
    seconds: float
    eps: float
    max_active: int = 0
    violations: list[str] = field(default_factory=list)
    error: Exception | None = None

    def summary(self) -> dict:
        return {
            "x": self.x.tolist(), "f0": self.f0, "samples": len(self.ledger),
            "seconds": self.seconds, "reason": self.reason, "iterations": len(self.trace),
            "final_eps": self.eps, "max_active": self.max_active,
            "infeasible_samples": self.ledger.n_infeasible,
            "violations": len(self.violations),
            "error": None if self.error is None else str(self.error),
        }


def gamma(eps: float, M_max: float, L_max: float) -> float:
    """Fallback step eps / (4 (M_max + L_max)) with guaranteed decrease."""
    return eps / (4.0 * (M_max + L_max))


class _Run:
    """Mutable bookkeeping shared by :func:`step` calls within one run."""

    def __init__(self, config: SolverConfig, lp_dump: IO[str] | None = None):
        self.config = config
        self.lp_dump = lp_dump
        self.max_active = 0
        self.violations: list[str] = []

    def violate(self, msg: str) -> None:
        if self.config.strict:
            raise InvariantError(msg)
        log.warning(msg)
        self.violations.append(msg)


def step(state: SolverState, problem: Problem, config: SolverConfig,
         run_ctx: _Run | None = None) -> tuple[SolverState, dict]:
    """One pass of the loop. Returns the new state and trace fields."""
    ctx = run_ctx or _Run(config)
    ledger = state.ledger
    ledger.iteration = state.k
    prof = problem.smoothness
    x, eps, values = state.x, state.eps, state.values

    probe, _, _, act2 = lp_query(problem, x, 2.0 * eps, ledger, values=values, dump=ctx.lp_dump)
    ctx.max_active = max(ctx.max_active, len(act2))
    if probe.solved and probe.value <= -4.0 * eps:
        new = SolverState(state.k + 1, x, 2.0 * eps, values, state.best_f0, ledger, "doubled")
        return new, {"action": "doubled", "n_active": len(act2),
                     "pred_descent": probe.value, "alpha": 0.0}

    direction, _, est, act = lp_query(problem, x, eps, ledger, values=values, dump=ctx.lp_dump)
    ctx.max_active = max(ctx.max_active, len(act))
    if not (direction.solved and direction.value <= -2.0 * eps):
        new = SolverState(state.k + 1, x, 0.5 * eps, values, state.best_f0, ledger, "halved")
        return new, {"action": "halved", "n_active": len(act),
                     "pred_descent": direction.value, "alpha": 0.0}

    s = direction.s
    g = gamma(eps, prof.M_max, prof.L_max)
    bound = -eps * eps / (8.0 * (prof.M_max + prof.L_max))
    if state.k < config.k_switch:
        lset = local_set_from_estimate(problem, est)
        beta = max_step(lset, s, bisection=config.bisection)
        cands = []
        if math.isfinite(beta):
            cands.append((beta, evaluate(problem, x + beta * s, "candidate", ledger)))
        f_gamma = evaluate(problem, x + g * s, "candidate", ledger)
        cands.append((g, f_gamma))
        action = "stepped-argmin"
    else:
        f_gamma = evaluate(problem, x + g * s, "line-search", ledger)
        cands = [(g, f_gamma)]
        action = "stepped-gamma"

    if not f_gamma[0] - values[0] < bound:
        ctx.violate(f"k={state.k}: sufficient decrease failed, "
                    f"f0 change {f_gamma[0] - values[0]:.3e} >= {bound:.3e}")
    safe = [(a, v) for a, v in cands if is_strictly_feasible(v)]
    if len(safe) < len(cands):
        ctx.violate(f"k={state.k}: candidate step left the strict interior")
    if not safe:
        raise InvariantError(f"k={state.k}: no strictly feasible candidate step")
    # min f0; ties go to the first entry, i.e. the local-set step
    alpha, new_values = min(safe, key=lambda av: av[1][0])
    if new_values[0] > values[0]:
        ctx.violate(f"k={state.k}: objective increased by {new_values[0] - values[0]:.3e}")
    x_new = x + alpha * s
    new = SolverState(state.k + 1, x_new, eps, new_values,
                      min(state.best_f0, float(new_values[0])), ledger, action)
    return new, {"action": action, "n_active": len(act),
                 "pred_descent": direction.value, "alpha": float(alpha)}


def run(problem: Problem, x0=None, config: SolverConfig | None = None,
        ledger: SampleLedger | None = None, lp_dump: IO[str] | None = None) -> RunResult:
    """Run SZO-LP from a strictly feasible ``x0``.

    Oracle, LP and invariant failures end the run with ``reason='error'``;
    the partial trace and ledger are kept on the result.
    """
    config = config or SolverConfig()
    ledger = ledger if ledger is not None else SampleLedger()
    x0 = problem.x0 if x0 is None else x0
    if x0 is None:
        raise ValueError("no starting point given")
    x0 = np.asarray(x0, dtype=float)
    t0 = time.perf_counter()
    ledger.iteration = 0
    values = evaluate(problem, x0, "candidate", ledger)
    if not is_strictly_feasible(values):
        raise InfeasibleStartError(
            f"start point is not strictly feasible (max f_i = {np.max(values[1:]):.6g})")

    state = SolverState(0, x0.copy(), config.eps0, values, float(values[0]), ledger)
    ctx = _Run(config, lp_dump)
    trace: list[IterationTrace] = []
    reason, error = "eps_min", None
    while state.eps > config.eps_min:
        if state.k >= config.max_iterations:
            reason = "max_iters"
            break
        eps_k = state.eps
        try:
            state, info = step(state, problem, config, ctx)
        except (OracleError, LPNumericalError, DegenerateMarginError, InvariantError) as exc:
            log.error("run aborted at k=%d: %s", state.k, exc)
            reason, error = "error", exc
            break
        trace.append(IterationTrace(
            k=state.k - 1, eps=eps_k, action=info["action"], f0=state.f0,
            max_fi=float(np.max(state.values[1:])) if state.values.size > 1 else -math.inf,
            n_active=info["n_active"], pred_descent=float(info["pred_descent"]),
            alpha=info["alpha"], samples=len(ledger),
            seconds=time.perf_counter() - t0))
    return RunResult(state.x, state.f0, trace, ledger, reason,
                     time.perf_counter() - t0, state.eps, ctx.max_active,
                     ctx.violations, error)


def kkt_residual(problem: Problem, x, tol_active: float = 1e-4):
    """Stationarity and complementarity residuals at ``x``.

    Multipliers come from nonnegative least squares over the constraints
    with f_i(x) >= -tol_active. Needs the problem's analytic gradient hook.
    Returns ``((stationarity, complementarity), lam)``.
    """
    if problem.gradient is None:
        raise ValueError("kkt_residual needs analytic gradients")
    x = np.asarray(x, dtype=float)
    values = np.asarray(problem.evaluator(x), dtype=float)
    J = np.asarray(problem.gradient(x), dtype=float)
    m = problem.n_constraints
    lam = np.zeros(m)
    active = np.flatnonzero(values[1:] >= -tol_active)
    if active.size:
        lam_a, stat = nnls(J[1 + active].T, -J[0])
        lam[active] = lam_a
    else:
        stat = float(np.linalg.norm(J[0]))
    comp = float(np.max(np.abs(lam * values[1:]))) if m else 0.0
    return (float(stat), comp), lam


def write_trace(trace: list[IterationTrace], fh: IO[str], fmt: str = "csv") -> None:
    if fmt == "csv":
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for rec in trace:
            w.writerow([repr(getattr(rec, f)) if isinstance(getattr(rec, f), float)
                        else getattr(rec, f) for f in TRACE_FIELDS])
    elif fmt == "jsonl":
        for rec in trace:
            fh.write(json.dumps({f: getattr(rec, f) for f in TRACE_FIELDS}) + "\n")
    else:
        raise ValueError(f"unknown trace format {fmt!r}")


def read_trace(fh: IO[str], fmt: str = "csv") -> list[IterationTrace]:
    ints = {"k", "n_active", "samples"}

    def conv(row: dict) -> IterationTrace:
        return IterationTrace(**{f: (int(row[f]) if f in ints else
                                     row[f] if f == "action" else float(row[f]))
                                 for f in TRACE_FIELDS})
    if fmt == "csv":
        return [conv(row) for row in csv.DictReader(fh)]
    if fmt == "jsonl":
        return [conv(json.loads(line)) for line in fh if line.strip()]
    raise ValueError(f"unknown trace format {fmt!r}")
