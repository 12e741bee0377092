"""Forward finite-difference gradients and the probe-step schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oracle import Problem, SampleLedger, evaluate

NU_FLOOR = 1e-12


class DegenerateMarginError(ArithmeticError):
    """Probe step fell below the floor; gradients would be cancellation noise."""


@dataclass(frozen=True)
class GradientEstimate:
    """Forward-difference estimates of all m+1 gradients at ``x``.

    ``jacobian[i]`` is the estimate of grad f_i(x); ``values`` are the
    centre values sampled during the sweep.
    """

    x: np.ndarray
    nu: float
    jacobian: np.ndarray
    values: np.ndarray

    def grad(self, i: int) -> np.ndarray:
        return self.jacobian[i]

    @staticmethod
    def error_bound(d: int, M: float, nu: float) -> float:
        return math.sqrt(d) * M * nu / 2.0


def estimate_gradients(problem: Problem, x, nu: float, ledger: SampleLedger,
                       indices=None) -> GradientEstimate:
    """Sample x and x + nu e_j (j = 1..d) and difference them.

    Every probe returns all functions, so one sweep of d+1 samples serves
    every index. ``indices`` only restricts which rows are returned
    non-NaN; it never changes the sample count.
    """
    if not nu > 0:
        raise ValueError(f"finite-difference step must be positive, got {nu}")
    x = np.asarray(x, dtype=float)
    d = problem.dimension
    center = evaluate(problem, x, "probe", ledger)
    probes = np.empty((d, center.size))
    for j in range(d):
        xp = x.copy()
        xp[j] += nu
        probes[j] = evaluate(problem, xp, "probe", ledger)
    jac = ((probes - center) / nu).T
    if indices is not None:
        keep = np.zeros(center.size, dtype=bool)
        keep[list(indices)] = True
        jac[~keep] = np.nan
    return GradientEstimate(x.copy(), float(nu), jac, center)


def nu_of_eps(eps: float, d: int, M_max: float) -> float:
    """Step giving gradient error at most eps: 2 eps / (sqrt(d) M_max)."""
    return 2.0 * eps / (math.sqrt(d) * M_max)


def safety_margin(values, L_max: float) -> float:
    """min_i -f_i / L_max over the constraints; a Lipschitz ball radius."""
    values = np.asarray(values, dtype=float)
    cons = values[1:]
    if cons.size == 0:
        return math.inf
    if np.any(cons >= 0):
        raise ValueError("safety margin needs a strictly feasible point")
    return float(np.min(-cons) / L_max)


def nu_star(eps: float, margin: float, d: int, M_max: float) -> float:
    """Probe step that is both accurate (<= eps error) and safe."""
    nu = min(margin / math.sqrt(d), nu_of_eps(eps, d, M_max))
    if nu < NU_FLOOR:
        raise DegenerateMarginError(
            f"probe step {nu:.3e} below floor {NU_FLOOR:g} (margin {margin:.3e})")
    return nu
