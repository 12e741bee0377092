"""AC power flow by Newton-Raphson in polar coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .case import PQ, PV, SLACK, GridCase


class PowerFlowError(RuntimeError):
    """Newton-Raphson diverged or hit a singular Jacobian."""


def branch_admittances(case: GridCase):
    """Pi-model two-port admittances (Yff, Yft, Ytf, Ytt) per branch, p.u."""
    ys = 1.0 / (case.r + 1j * case.x)
    bc = case.b
    tap = case.tap * np.exp(1j * np.deg2rad(case.shift_deg))
    ytt = ys + 0.5j * bc
    yff = ytt / (tap * np.conj(tap))
    yft = -ys / np.conj(tap)
    ytf = -ys / tap
    return yff, yft, ytf, ytt


def make_ybus(case: GridCase) -> np.ndarray:
    n = case.n_bus
    yff, yft, ytf, ytt = branch_admittances(case)
    Y = np.zeros((n, n), dtype=complex)
    f, t = case.f_bus, case.t_bus
    np.add.at(Y, (f, f), yff)
    np.add.at(Y, (f, t), yft)
    np.add.at(Y, (t, f), ytf)
    np.add.at(Y, (t, t), ytt)
    Y[np.diag_indices(n)] += (case.Gs + 1j * case.Bs) / case.base_mva
    return Y


def branch_flow(vf: complex, vt: complex, r: float, x: float, b: float = 0.0,
                tap: float = 1.0, shift_deg: float = 0.0) -> tuple[float, float, float]:
    """Sending-end (P, Q, |I|) of one pi-model branch, everything in p.u."""
    ys = 1.0 / complex(r, x)
    a = tap * np.exp(1j * np.deg2rad(shift_deg))
    i_f = (ys + 0.5j * b) / (a * np.conj(a)) * vf - ys / np.conj(a) * vt
    s = vf * np.conj(i_f)
    return float(s.real), float(s.imag), float(abs(i_f))


def branch_flows(case: GridCase, V: np.ndarray):
    """Complex flows and current magnitudes at both ends of every branch."""
    yff, yft, ytf, ytt = branch_admittances(case)
    vf, vt = V[case.f_bus], V[case.t_bus]
    i_f = yff * vf + yft * vt
    i_t = ytf * vf + ytt * vt
    return vf * np.conj(i_f), vt * np.conj(i_t), np.abs(i_f), np.abs(i_t)


def power_injections(Y: np.ndarray, V: np.ndarray) -> np.ndarray:
    return V * np.conj(Y @ V)


def jacobian_blocks(Y: np.ndarray, V: np.ndarray):
    """dS/dtheta and dS/d|V| of the bus injections S = V conj(Y V)."""
    Ibus = Y @ V
    Vn = V / np.abs(V)
    dS_dVa = 1j * np.diag(V) @ np.conj(np.diag(Ibus) - Y * V[None, :])
    dS_dVm = np.diag(V) @ np.conj(Y * Vn[None, :]) + np.diag(np.conj(Ibus) * Vn)
    return dS_dVa, dS_dVm


def newton_jacobian(Y, V, pvpq, pq) -> np.ndarray:
    dVa, dVm = jacobian_blocks(Y, V)
    return np.block([
        [dVa[np.ix_(pvpq, pvpq)].real, dVm[np.ix_(pvpq, pq)].real],
        [dVa[np.ix_(pq, pvpq)].imag, dVm[np.ix_(pq, pq)].imag],
    ])


def mismatch(Y, V, S_spec, pvpq, pq) -> np.ndarray:
    dS = power_injections(Y, V) - S_spec
    return np.concatenate([dS[pvpq].real, dS[pq].imag])


@dataclass
class PowerFlowSolution:
    V: np.ndarray          # complex bus voltages, p.u.
    S_bus: np.ndarray      # computed complex injections, p.u.
    Pg: np.ndarray         # generator active output, p.u. (gen order)
    Qg: np.ndarray
    Sf: np.ndarray
    St: np.ndarray
    If: np.ndarray
    It: np.ndarray
    iterations: int
    mismatch: float

    @property
    def Vm(self) -> np.ndarray:
        return np.abs(self.V)

    @property
    def Va(self) -> np.ndarray:
        return np.angle(self.V)

    @property
    def slack_p(self) -> float:
        return float(self.Pg[0])


def solve_power_flow(case: GridCase, pg_mw, v_set, tol: float = 1e-8, max_iter: int = 30,
                     Y: np.ndarray | None = None) -> PowerFlowSolution:
    """Solve for bus voltages given non-slack generator outputs and setpoints.

    ``pg_mw`` holds P for generators 2..n_G (MW), ``v_set`` the voltage
    magnitudes of all generator buses (slack first). Generator buses are PV,
    the slack bus keeps angle 0, the rest are PQ. Starts flat every call.
    """
    pg_mw = np.asarray(pg_mw, dtype=float)
    v_set = np.asarray(v_set, dtype=float)
    if pg_mw.shape != (case.n_gen - 1,) or v_set.shape != (case.n_gen,):
        raise ValueError("decision has the wrong shape for this case")
    if not (np.all(np.isfinite(pg_mw)) and np.all(np.isfinite(v_set))):
        raise ValueError("decision must be finite")
    Y = make_ybus(case) if Y is None else Y
    n = case.n_bus
    base = case.base_mva
    slack = case.slack
    btype = np.full(n, PQ)
    btype[case.gen_bus] = PV
    btype[slack] = SLACK
    pv = np.flatnonzero(btype == PV)
    pq = np.flatnonzero(btype == PQ)
    pvpq = np.concatenate([pv, pq])

    P_spec = -case.Pd / base
    Q_spec = -case.Qd / base
    P_spec[case.gen_bus[1:]] += pg_mw / base
    S_spec = P_spec + 1j * Q_spec

    Vm = np.ones(n)
    Vm[case.gen_bus] = v_set
    Va = np.zeros(n)
    V = Vm * np.exp(1j * Va)

    F = mismatch(Y, V, S_spec, pvpq, pq)
    it = 0
    n_pvpq = pvpq.size
    while np.max(np.abs(F), initial=0.0) > tol:
        if it >= max_iter:
            raise PowerFlowError(f"no convergence in {max_iter} iterations "
                                 f"(mismatch {np.max(np.abs(F)):.3e})")
        J = newton_jacobian(Y, V, pvpq, pq)
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise PowerFlowError(f"singular Jacobian at iteration {it}") from exc
        Va[pvpq] += dx[:n_pvpq]
        Vm[pq] += dx[n_pvpq:]
        if np.any(Vm <= 0) or not np.all(np.isfinite(dx)):
            raise PowerFlowError(f"divergence at iteration {it}")
        V = Vm * np.exp(1j * Va)
        F = mismatch(Y, V, S_spec, pvpq, pq)
        it += 1

    S = power_injections(Y, V)
    Pg = S.real[case.gen_bus] + case.Pd[case.gen_bus] / base
    Qg = S.imag[case.gen_bus] + case.Qd[case.gen_bus] / base
    Sf, St, If, It = branch_flows(case, V)
    return PowerFlowSolution(V, S, Pg, Qg, Sf, St, If, It, it,
                             float(np.max(np.abs(F), initial=0.0)))
