"""Optimal power flow as a black box over generator set-points.

Decision vector: P_G2..P_GnG followed by U_1..U_nG (slack generator
first). Each sample runs one power flow; the objective is the total
quadratic generation cost including the slack unit, and the constraints
are one-sided operating limits.

Decision variables and constraint values are per-unit quantities times
``scale``. The default of 100 expresses everything in hundredths of a per
unit: MW and MVAr on a 100 MVA base, voltages in percent. In these units
the scalar constants M = 0.13 and L = 0.5 are of the right order for every
function; in plain per unit (``scale=1``) the voltage directions are far
more curved than 0.13 and dozens of voltage limits fall inside the
near-active band at eps = 0.05.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..oracle import Problem
from .case import GridCase
from .pf import make_ybus, solve_power_flow

DEFAULT_M = 0.13
DEFAULT_L = 0.5
DEFAULT_SCALE = 100.0


@dataclass(frozen=True)
class OpfDecision:
    p_gen: np.ndarray   # generators 2..n_G, MW
    v_set: np.ndarray   # generator buses 1..n_G, p.u.

    def to_vector(self, base_mva: float, scale: float = DEFAULT_SCALE) -> np.ndarray:
        return np.concatenate([self.p_gen / base_mva, self.v_set]) * scale

    @classmethod
    def from_vector(cls, x, n_gen: int, base_mva: float,
                    scale: float = DEFAULT_SCALE) -> OpfDecision:
        x = np.asarray(x, dtype=float)
        if x.shape != (2 * n_gen - 1,):
            raise ValueError(f"decision vector must have length {2 * n_gen - 1}")
        x = x / scale
        return cls(x[:n_gen - 1] * base_mva, x[n_gen - 1:])

    @classmethod
    def from_case(cls, case: GridCase) -> OpfDecision:
        return cls(case.Pg[1:].copy(), case.Vg.copy())


def constraint_layout(case: GridCase, q_limits: bool = False) -> list[str]:
    """Names of the constraint functions, in evaluation order."""
    names = []
    for g in range(case.n_gen):
        bus = case.bus_ids[case.gen_bus[g]]
        names += [f"Pg{bus}_max", f"Pg{bus}_min"]
    for k in range(case.n_bus):
        names += [f"V{case.bus_ids[k]}_max", f"V{case.bus_ids[k]}_min"]

    def tag(k):
        return f"{case.bus_ids[case.f_bus[k]]}-{case.bus_ids[case.t_bus[k]]}"
    names += [f"I{tag(k)}_max" for k in np.flatnonzero(case.rate_a > 0)]
    names += [f"I{tag(k)}_min" for k in np.flatnonzero(_current_lower(case))]
    for g in np.flatnonzero(_has_q_limits(case) & q_limits):
        bus = case.bus_ids[case.gen_bus[g]]
        names += [f"Qg{bus}_max", f"Qg{bus}_min"]
    return names


def _current_lower(case: GridCase) -> np.ndarray:
    # a zero lower bound on a magnitude is vacuous and is not emitted
    if case.i_min is None:
        return np.zeros(case.n_branch, dtype=bool)
    return case.i_min > 0


def _has_q_limits(case: GridCase) -> np.ndarray:
    return (case.Qmax > case.Qmin) & np.isfinite(case.Qmax) & np.isfinite(case.Qmin)


def opf_problem(case: GridCase, L: float = DEFAULT_L, M: float = DEFAULT_M,
                scale: float = DEFAULT_SCALE, q_limits: bool = False, tol: float = 1e-8,
                max_iter: int = 30) -> Problem:
    """Wrap the power flow into a :class:`Problem`.

    Constraints: P_G bounds of every generator, U bounds of every bus, the
    current rating of every rated branch, current lower bounds where the
    case gives a positive one, and, with ``q_limits``, the generator
    reactive-power bounds. Reactive output reacts to the voltage set-points
    about fifty times more strongly than L = 0.5 allows, so the Q bounds are
    off by default; they are not part of the classic formulation either.

    Power flow failures propagate as exceptions; no constraint values are
    invented for them.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    base = case.base_mva
    Y = make_ybus(case)
    n_gen = case.n_gen
    rated = np.flatnonzero(case.rate_a > 0)
    i_max = case.rate_a[rated] / base
    lower = np.flatnonzero(_current_lower(case))
    qlim = np.flatnonzero(_has_q_limits(case) & q_limits)
    names = constraint_layout(case, q_limits)

    def evaluator(x):
        dec = OpfDecision.from_vector(x, n_gen, base, scale)
        sol = solve_power_flow(case, dec.p_gen, dec.v_set, tol=tol, max_iter=max_iter, Y=Y)
        pg = sol.Pg.copy()
        pg[1:] = dec.p_gen / base   # exact decision values, not PF round-off
        parts = [np.column_stack([pg - case.Pmax / base, case.Pmin / base - pg]).ravel(),
                 np.column_stack([sol.Vm - case.Vmax, case.Vmin - sol.Vm]).ravel()]
        parts.append(sol.If[rated] - i_max)
        if lower.size:
            parts.append(case.i_min[lower] - sol.If[lower])
        qg = sol.Qg[qlim]
        parts.append(np.column_stack([qg - case.Qmax[qlim] / base,
                                      case.Qmin[qlim] / base - qg]).ravel())
        cost = case.gen_cost(pg * base)
        return np.concatenate([[cost], scale * np.concatenate(parts)])

    m = len(names)
    return Problem(
        dimension=2 * n_gen - 1, evaluator=evaluator, n_constraints=m,
        L=np.full(m + 1, L), M=np.full(m + 1, M), name=f"opf-{case.name}",
        x0=OpfDecision.from_case(case).to_vector(base, scale), constraint_names=names)
