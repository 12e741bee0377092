"""Quadratic inner approximation of the feasible set around an iterate.

S(x_k) = { x : f_i(x_k) + g_i^T (x - x_k) + 2 M_i |x - x_k|^2 <= 0, i = 1..m }

where g_i are forward-difference gradients at x_k. With valid M_i the set
lies strictly inside the true feasible region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gradient import GradientEstimate, estimate_gradients, nu_star, safety_margin
from .oracle import Problem, SampleLedger, evaluate, is_strictly_feasible


@dataclass(frozen=True)
class LocalFeasibleSet:
    center: np.ndarray
    values: np.ndarray      # f_1..f_m at the centre
    gradients: np.ndarray   # (m, d)
    M: np.ndarray           # (m,)

    def proxies(self, x) -> np.ndarray:
        dx = np.asarray(x, dtype=float) - self.center
        return self.values + self.gradients @ dx + 2.0 * self.M * float(dx @ dx)

    def contains(self, x) -> bool:
        return bool(np.all(self.proxies(x) <= 0.0))

    def max_step(self, s, bisection: bool = False) -> float:
        return max_step(self, s, bisection=bisection)


def local_set_from_estimate(problem: Problem, est: GradientEstimate) -> LocalFeasibleSet:
    if not is_strictly_feasible(est.values):
        raise ValueError("local set centre must be strictly feasible")
    return LocalFeasibleSet(est.x.copy(), est.values[1:].copy(),
                            est.jacobian[1:].copy(), problem.M[1:].copy())


def build_local_set(problem: Problem, x_k, eps_k: float, ledger: SampleLedger,
                    center_values=None) -> LocalFeasibleSet:
    """Sample a fresh gradient sweep at nu_k*(eps_k) and build S(x_k).

    ``center_values`` (already-known f(x_k)) only sets the margin; the sweep
    still samples the centre.
    """
    prof = problem.smoothness
    if center_values is None:
        center_values = evaluate(problem, x_k, "probe", ledger)
    margin = safety_margin(center_values, prof.L_max)
    nu = nu_star(eps_k, margin, problem.dimension, prof.M_max)
    est = estimate_gradients(problem, x_k, nu, ledger)
    return local_set_from_estimate(problem, est)


def contains(lset: LocalFeasibleSet, x) -> bool:
    return lset.contains(x)


def _ray_roots(lset: LocalFeasibleSet, s: np.ndarray) -> np.ndarray:
    a = 2.0 * lset.M * float(s @ s)
    b = lset.gradients @ s
    c = lset.values
    disc = b * b - 4.0 * a * c
    sq = np.sqrt(disc)
    # stable form of (-b + sqrt(disc)) / (2a); c < 0 so disc > b^2
    return np.where(b > 0, (-2.0 * c) / (b + sq), (-b + sq) / (2.0 * a))


def max_step(lset: LocalFeasibleSet, s, bisection: bool = False,
             tol: float = 1e-10) -> float:
    """Largest beta >= 0 with x_k + beta s in S(x_k).

    Along a ray each quadratic piece is a scalar quadratic with a negative
    constant term, so the answer is the smallest positive root. The
    bisection route exists to cross-check the closed form.
    """
    s = np.asarray(s, dtype=float)
    if not np.any(s):
        raise ValueError("direction must be nonzero")
    if lset.values.size == 0:
        return math.inf
    beta = float(np.min(_ray_roots(lset, s)))
    if not bisection:
        return beta
    lo, hi = 0.0, 2.0 * beta
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lset.contains(lset.center + mid * s):
            lo = mid
        else:
            hi = mid
    return lo
