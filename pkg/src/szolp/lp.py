"""Descent-direction linear program over the l1 ball.

    min  g_0^T s
    s.t. |s|_1 <= 1
         g_i^T s + 2 eps <= 0     for i in A(x, eps) = {i : f_i(x) >= -2 eps}

solved by a dense two-phase primal simplex with Bland's rule. With the
split s = u - v (u, v >= 0) the l1 ball becomes the single row
sum(u) + sum(v) <= 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .gradient import GradientEstimate, estimate_gradients, nu_star, safety_margin
from .oracle import Problem, SampleLedger, evaluate

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-12
INFEAS_TOL = 1e-9


class LPNumericalError(ArithmeticError):
    """Simplex breakdown (no admissible pivot, or pivot limit hit)."""


@dataclass(frozen=True)
class NearActiveSet:
    eps: float
    indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class Direction:
    status: str                      # "solved" | "infeasible"
    s: np.ndarray | None = None
    value: float = float("nan")      # g_0^T s
    pivots: int = 0

    @property
    def solved(self) -> bool:
        return self.status == "solved"


def near_active(values, eps: float) -> NearActiveSet:
    """Constraint indices (1-based, as in the value vector) with f_i >= -2 eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    values = np.asarray(values, dtype=float)
    idx = np.flatnonzero(values[1:] >= -2.0 * eps) + 1
    return NearActiveSet(float(eps), tuple(int(i) for i in idx))


@dataclass
class _Tableau:
    T: np.ndarray          # rows: constraints, last column: rhs
    basis: list[int]
    pivots: int = 0
    dump: IO[str] | None = None
    labels: list[str] = field(default_factory=list)

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        p = T[r, c]
        if abs(p) < PIVOT_TOL:
            raise LPNumericalError(f"pivot {p:.3e} below {PIVOT_TOL:g}")
        T[r] /= p
        for i in range(T.shape[0]):
            if i != r and T[i, c] != 0.0:
                T[i] -= T[i, c] * T[r]
        self.basis[r] = c
        self.pivots += 1

    def write(self, title: str) -> None:
        if self.dump is None:
            return
        self.dump.write(f"# {title} (pivots={self.pivots})\n")
        self.dump.write("basis: " + " ".join(self.labels[b] for b in self.basis) + "\n")
        self.dump.write("      " + " ".join(f"{lab:>10s}" for lab in self.labels) + " " * 7 + "rhs\n")
        for row in self.T:
            self.dump.write("      " + " ".join(f"{v:10.4g}" for v in row) + "\n")
        self.dump.write("\n")


def _simplex(tab: _Tableau, cost: np.ndarray, allowed: np.ndarray, max_pivots: int) -> None:
    """Minimize cost^T z over the tableau's polyhedron with Bland's rule.

    ``allowed`` masks columns that may enter the basis.
    """
    T = tab.T
    n = T.shape[1] - 1
    while True:
        cb = cost[tab.basis]
        reduced = cost[:n] - cb @ T[:, :n]
        enter = -1
        for j in range(n):
            if allowed[j] and reduced[j] < -PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return
        col = T[:, enter]
        best_ratio, leave = np.inf, -1
        for i in range(T.shape[0]):
            if col[i] > PIVOT_TOL:
                ratio = T[i, -1] / col[i]
                if ratio < best_ratio - 1e-15 or (
                        abs(ratio - best_ratio) <= 1e-15 and tab.basis[i] < tab.basis[leave]):
                    best_ratio, leave = ratio, i
        if leave < 0:
            raise LPNumericalError(f"no admissible pivot row for column {enter}")
        tab.pivot(leave, enter)
        if tab.pivots > max_pivots:
            raise LPNumericalError("pivot limit exceeded")


def solve_direction(g0, constraints, eps: float, dump: IO[str] | None = None) -> Direction:
    """Solve the tightened l1-ball LP.

    ``constraints`` is a sequence of gradient vectors g_i, one per
    near-active constraint. Returns an infeasible Direction when phase 1
    cannot drive the artificial variables below 1e-9.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    g0 = np.asarray(g0, dtype=float)
    d = g0.size
    G = np.asarray(constraints, dtype=float).reshape(-1, d)
    p = G.shape[0]
    # columns: u (d) | v (d) | t0 | t_1..t_p | a_1..a_p | rhs
    n_struct = 2 * d
    n_slack = 1 + p
    n = n_struct + n_slack + p
    T = np.zeros((1 + p, n + 1))
    T[0, :n_struct] = 1.0
    T[0, n_struct] = 1.0
    T[0, -1] = 1.0
    for r in range(p):
        # g^T(u - v) + t_r = -2 eps, negated so rhs >= 0
        T[1 + r, :d] = -G[r]
        T[1 + r, d:n_struct] = G[r]
        T[1 + r, n_struct + 1 + r] = -1.0
        T[1 + r, n_struct + n_slack + r] = 1.0
        T[1 + r, -1] = 2.0 * eps
    basis = [n_struct] + [n_struct + n_slack + r for r in range(p)]
    labels = ([f"u{j}" for j in range(d)] + [f"v{j}" for j in range(d)] + ["t0"]
              + [f"t{r + 1}" for r in range(p)] + [f"a{r + 1}" for r in range(p)])
    tab = _Tableau(T, basis, dump=dump, labels=labels)
    max_pivots = 50 * (n + p + 1)
    tab.write("initial")

    art = np.zeros(n, dtype=bool)
    art[n_struct + n_slack:] = True
    if p:
        c1 = np.zeros(n)
        c1[art] = 1.0
        _simplex(tab, c1, np.ones(n, dtype=bool), max_pivots)
        tab.write("phase 1")
        infeas = float(c1[tab.basis] @ tab.T[:, -1])
        if infeas > INFEAS_TOL:
            return Direction("infeasible", pivots=tab.pivots)
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for r, b in enumerate(list(tab.basis)):
            if not art[b]:
                keep.append(r)
                continue
            row = tab.T[r, :n]
            cand = [j for j in range(n) if not art[j] and abs(row[j]) > PIVOT_TOL]
            if cand:
                tab.pivot(r, cand[0])
                keep.append(r)
        tab.T = tab.T[keep]
        tab.basis = [tab.basis[r] for r in keep]

    c2 = np.zeros(n)
    c2[:d] = g0
    c2[d:n_struct] = -g0
    _simplex(tab, c2, ~art, max_pivots)
    tab.write("phase 2")

    z = np.zeros(n)
    z[tab.basis] = tab.T[:, -1]
    s = z[:d] - z[d:n_struct]
    return Direction("solved", s=s, value=float(g0 @ s), pivots=tab.pivots)


def lp_query(problem: Problem, x, eps: float, ledger: SampleLedger, values=None,
             dump: IO[str] | None = None):
    """Estimate gradients at nu*(eps) and solve the direction LP.

    ``values`` are the already-known f(x) used for the margin and the
    near-active set. Returns ``(direction, nu, estimate, active)``.
    """
    prof = problem.smoothness
    if values is None:
        values = evaluate(problem, x, "probe", ledger)
    margin = safety_margin(values, prof.L_max)
    nu = nu_star(eps, margin, problem.dimension, prof.M_max)
    est: GradientEstimate = estimate_gradients(problem, x, nu, ledger)
    active = near_active(est.values, eps)
    g_cons = est.jacobian[list(active.indices)] if len(active) else np.zeros((0, problem.dimension))
    if dump is not None:
        dump.write(f"## LP eps={eps:.6g} nu={nu:.6g} active={list(active.indices)}\n")
    direction = solve_direction(est.jacobian[0], g_cons, eps, dump=dump)
    return direction, nu, est, active
