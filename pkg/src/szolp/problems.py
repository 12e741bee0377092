"""Analytic test problems with exact gradients and valid (L, M) bounds.

The objective's own curvature is folded into the constraints' M so that
M_max also bounds f_0; the sufficient-decrease guarantee needs that.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from .oracle import Problem


def one_d() -> Problem:
    """min x  s.t.  -1 - x <= 0.  KKT pair (x, lam) = (-1, 1)."""
    return Problem(
        dimension=1,
        evaluator=lambda x: np.array([x[0], -1.0 - x[0]]),
        n_constraints=1,
        L=[1.0, 1.0],
        M=[0.1, 0.1],
        name="one-d",
        gradient=lambda x: np.array([[1.0], [-1.0]]),
        x0=np.zeros(1),
    )


def qp_corner() -> Problem:
    """min |x - (2,2)|^2  s.t.  x_1 <= 1, x_2 <= 1.  Optimum (1,1), lam = (2,2)."""
    c = np.array([2.0, 2.0])

    def f(x):
        return np.array([float((x - c) @ (x - c)), x[0] - 1.0, x[1] - 1.0])

    def grad(x):
        return np.array([2.0 * (x - c), [1.0, 0.0], [0.0, 1.0]])

    return Problem(2, f, 2, L=[6.0, 1.0, 1.0], M=[2.0, 2.0, 2.0], name="qp-corner",
                   gradient=grad, x0=np.zeros(2))


def random_qp(rng: np.random.Generator, d: int | None = None, m: int | None = None,
              radius: float = 3.0) -> Problem:
    """Random convex QP with linear and convex quadratic constraints.

    Always contains the ball constraint |x|^2 <= radius^2, which bounds the
    feasible region so that finite Lipschitz constants exist. x0 = 0 is
    strictly feasible: every constraint has a negative constant term.
    """
    d = int(rng.integers(1, 11)) if d is None else d
    m = int(rng.integers(1, 21)) if m is None else m
    # Lipschitz constants must hold on a region containing every probe
    R = 1.5 * radius

    A = rng.standard_normal((d, d))
    Q = A @ A.T / d + 0.1 * np.eye(d)
    c = rng.standard_normal(d)
    cons: list[tuple[np.ndarray, np.ndarray, float]] = [(2.0 * np.eye(d), np.zeros(d), radius ** 2)]
    for _ in range(m - 1):
        q = rng.standard_normal(d)
        r = float(rng.uniform(0.2, 2.0))
        if rng.random() < 0.5:
            P = np.zeros((d, d))
        else:
            B = rng.standard_normal((d, d))
            P = 0.5 * B @ B.T / d
        cons.append((P, q, r))

    Ps = np.array([P for P, _, _ in cons])
    qs = np.array([q for _, q, _ in cons])
    rs = np.array([r for _, _, r in cons])

    def f(x):
        f0 = 0.5 * x @ Q @ x + c @ x
        fi = 0.5 * np.einsum("i,kij,j->k", x, Ps, x) + qs @ x - rs
        return np.concatenate([[f0], fi])

    def grad(x):
        return np.vstack([Q @ x + c, Ps @ x + qs])

    def spec_norm(P):
        return float(np.linalg.norm(P, 2))

    M0 = spec_norm(Q)
    Mi = np.array([spec_norm(P) for P in Ps])
    Li = np.array([spec_norm(P) * R + np.linalg.norm(q) for P, q in zip(Ps, qs)])
    L0 = M0 * R + np.linalg.norm(c)
    M_all = max(M0, Mi.max()) * 1.01 + 1e-3
    L = np.concatenate([[L0], Li]) * 1.01 + 1e-3
    M = np.full(m + 1, M_all)
    return Problem(d, f, m, L=L, M=M, name=f"random-qp-d{d}-m{m}", gradient=grad,
                   x0=np.zeros(d))


def stationary_interior() -> Problem:
    """min |x|^2 s.t. |x|^2 <= 4, started at the minimiser 0."""
    return Problem(
        2, lambda x: np.array([x @ x, x @ x - 4.0]), 1, L=[4.0, 4.0], M=[2.0, 2.0],
        name="stationary", gradient=lambda x: np.array([2 * x, 2 * x]), x0=np.zeros(2))


REGISTRY: dict[str, Callable[[], Problem]] = {
    "one-d": one_d,
    "qp-corner": qp_corner,
    "stationary": stationary_interior,
}


def get_problem(name: str) -> Problem:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {sorted(REGISTRY)}") from None
