"""Property suites behind ``szolp check``.

Each suite draws its own random instances from a seeded generator and
returns a :class:`SuiteReport`. The LP suite compares the simplex against
brute-force vertex enumeration of the polytope

    { s : sigma^T s <= 1 for all sigma in {-1, 1}^d,  g_i^T s <= -2 eps }.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .gradient import GradientEstimate, estimate_gradients
from .localset import LocalFeasibleSet, max_step
from .lp import near_active, solve_direction
from .oracle import Problem, SampleLedger
from .problems import one_d, qp_corner, random_qp
from .solver import SolverConfig, kkt_residual, run

SUITES = ("lp", "gradient", "safety", "kkt", "localset")


@dataclass
class SuiteReport:
    name: str
    passed: bool
    lines: list[str] = field(default_factory=list)

    def __str__(self) -> str:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"
        return "\n".join([head] + ["  " + ln for ln in self.lines])


def enumerate_lp(g0, constraints, eps: float, feas_tol: float = 1e-9):
    """Brute-force LP optimum: ``(value, s)`` or ``None`` if infeasible.

    The feasible set is a bounded polytope, so it is empty exactly when it
    has no vertex. Every d-subset of the bounding hyperplanes is solved at
    once with a batched linear solve.
    """
    g0 = np.asarray(g0, dtype=float)
    d = g0.size
    G = np.asarray(constraints, dtype=float).reshape(-1, d)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
    A = np.vstack([signs, G])
    b = np.concatenate([np.ones(len(signs)), np.full(len(G), -2.0 * eps)])
    combos = np.array(list(itertools.combinations(range(len(A)), d)))
    As = A[combos]
    ok = np.abs(np.linalg.det(As)) > 1e-12
    if not np.any(ok):
        return None
    pts = np.linalg.solve(As[ok], b[combos[ok]][..., None])[..., 0]
    feas = np.all(pts @ A.T <= b + feas_tol, axis=1)
    if not np.any(feas):
        return None
    vals = pts[feas] @ g0
    k = int(np.argmin(vals))
    return float(vals[k]), pts[feas][k]


def lp_suite(rng: np.random.Generator, n: int = 1000, tol: float = 1e-8) -> SuiteReport:
    mismatched, verdicts, n_inf = 0, 0, 0
    for _ in range(n):
        d = int(rng.integers(1, 5))
        p = int(rng.integers(0, 4))
        g0 = rng.standard_normal(d)
        G = rng.standard_normal((p, d))
        eps = float(rng.uniform(0.01, 0.3))
        ref = enumerate_lp(g0, G, eps)
        got = solve_direction(g0, G, eps)
        if (ref is None) != (not got.solved):
            verdicts += 1
            continue
        if ref is None:
            n_inf += 1
        elif abs(ref[0] - got.value) > tol:
            mismatched += 1
    lines = [f"{n} instances, {n_inf} infeasible",
             f"value mismatches > {tol:g}: {mismatched}",
             f"verdict disagreements: {verdicts}"]
    return SuiteReport("lp", mismatched == 0 and verdicts == 0, lines)


def _quadratic(rng: np.random.Generator, d: int):
    B = rng.standard_normal((d, d))
    Q = B + B.T
    c = rng.standard_normal(d)
    M = float(np.linalg.norm(Q, 2))
    prob = Problem(d, lambda x: np.array([0.5 * x @ Q @ x + c @ x]), 0, L=[1.0], M=[M])
    return prob, (lambda x: Q @ x + c), M


def gradient_suite(rng: np.random.Generator, n: int = 1000) -> SuiteReport:
    worst, failures = 0.0, 0
    for _ in range(n):
        d = int(rng.integers(1, 11))
        prob, grad, M = _quadratic(rng, d)
        x = rng.uniform(-5, 5, d)
        nu = float(10.0 ** rng.uniform(-6, 0))
        est = estimate_gradients(prob, x, nu, SampleLedger())
        err = float(np.linalg.norm(est.grad(0) - grad(x)))
        bound = GradientEstimate.error_bound(d, M, nu)
        worst = max(worst, err / bound)
        # floating-point cancellation in f(x + nu e_j) - f(x), not truncation
        roundoff = 8 * np.finfo(float).eps * math.sqrt(d) * (1 + abs(est.values[0])) / nu
        if err > bound + roundoff:
            failures += 1
    return SuiteReport("gradient", failures == 0,
                       [f"{n} quadratics, bound violations: {failures}",
                        f"worst error / bound: {worst:.4f}"])


def safety_suite(rng: np.random.Generator, n: int = 50, eps_min: float = 1e-4) -> SuiteReport:
    bad_samples = bad_runs = samples = 0
    for _ in range(n):
        prob = random_qp(rng)
        res = run(prob, config=SolverConfig(eps_min=eps_min))
        samples += len(res.ledger)
        bad_samples += res.ledger.n_infeasible
        if res.reason == "error":
            bad_runs += 1
    return SuiteReport("safety", bad_samples == 0 and bad_runs == 0,
                       [f"{n} random QP runs, {samples} samples",
                        f"infeasible samples: {bad_samples}",
                        f"runs ended by an invariant or oracle error: {bad_runs}"])


def kkt_suite(rng: np.random.Generator | None = None, tol: float = 1e-2) -> SuiteReport:
    cases = [(one_d(), np.array([-1.0])), (qp_corner(), np.array([1.0, 1.0]))]
    ok = True
    lines = [f"{'problem':<10} {'stationarity':>13} {'complement':>11} {'distance':>10}"]
    for prob, x_opt in cases:
        res = run(prob, config=SolverConfig(eps_min=1e-6))
        (stat, comp), _ = kkt_residual(prob, res.x)
        dist = float(np.linalg.norm(res.x - x_opt))
        ok &= stat <= tol and comp <= tol and dist <= tol and res.reason == "eps_min"
        lines.append(f"{prob.name:<10} {stat:13.3e} {comp:11.3e} {dist:10.3e}")
    return SuiteReport("kkt", bool(ok), lines)


def localset_suite(rng: np.random.Generator, n: int = 200, dirs: int = 5) -> SuiteReport:
    """Steps to the local-set boundary stay strictly feasible, and the
    closed-form step agrees with bisection."""
    unsafe = disagree = 0
    for _ in range(n):
        prob = random_qp(rng)
        x = np.zeros(prob.dimension)
        J = prob.gradient(x)
        values = prob.evaluator(x)
        lset = LocalFeasibleSet(x, values[1:], J[1:], prob.M[1:])
        for _ in range(dirs):
            s = rng.standard_normal(prob.dimension)
            s /= np.abs(s).sum()
            beta = max_step(lset, s)
            beta_b = max_step(lset, s, bisection=True)
            if not math.isclose(beta, beta_b, rel_tol=1e-8, abs_tol=1e-9):
                disagree += 1
            if np.any(prob.evaluator(x + beta * s)[1:] >= 0):
                unsafe += 1
    return SuiteReport("localset", unsafe == 0 and disagree == 0,
                       [f"{n * dirs} rays on {n} random QPs",
                        f"boundary steps leaving the feasible set: {unsafe}",
                        f"closed form vs bisection disagreements: {disagree}"])


def descent_persistence(rng: np.random.Generator, n: int = 100, levels: int = 5) -> SuiteReport:
    """With exact gradients, a descent test passed at eps also passes at
    eps / 4, eps / 8, ... (the near-active set only shrinks)."""
    tested = counter = 0
    for _ in range(n):
        prob = random_qp(rng)
        x = rng.standard_normal(prob.dimension)
        values = prob.evaluator(x)
        while np.any(values[1:] >= 0):
            x *= 0.5
            values = prob.evaluator(x)
        J = prob.gradient(x)
        eps = float(rng.uniform(0.05, 0.5))
        act = near_active(values, eps)
        top = solve_direction(J[0], J[list(act.indices)], eps)
        if not (top.solved and top.value <= -2 * eps):
            continue
        tested += 1
        for j in range(2, 2 + levels):
            e = eps / 2 ** j
            a = near_active(values, e)
            sub = solve_direction(J[0], J[list(a.indices)], e)
            if not (sub.solved and sub.value <= -2 * e):
                counter += 1
    return SuiteReport("descent-persistence", counter == 0,
                       [f"{n} points, {tested} passed at the top level",
                        f"counterexamples: {counter}"])


def run_suite(name: str, seed: int = 0) -> SuiteReport:
    rng = np.random.default_rng(seed)
    table = {"lp": lp_suite, "gradient": gradient_suite, "safety": safety_suite,
             "kkt": kkt_suite, "localset": localset_suite}
    if name not in table:
        raise KeyError(f"unknown suite {name!r}; known: {', '.join(SUITES)}")
    return table[name](rng)
