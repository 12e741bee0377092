"""Black-box problem abstraction and the sample ledger.

Every query of a problem goes through :func:`evaluate`, which appends one
record to a :class:`SampleLedger`. The ledger is what the safety checks
audit: a correct run never contains a record with a positive constraint.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import IO

import numpy as np

PURPOSES = ("probe", "candidate", "line-search")


class OracleError(RuntimeError):
    """The evaluator failed at a query point (e.g. power flow divergence)."""

    def __init__(self, x, message: str):
        self.x = np.array(x, dtype=float)
        super().__init__(f"oracle failure at x={self.x.tolist()}: {message}")


@dataclass
class Problem:
    """min f_0(x) s.t. f_i(x) <= 0, i = 1..m, known only through samples.

    ``evaluator(x)`` returns the vector (f_0(x), ..., f_m(x)). ``L`` and
    ``M`` hold one Lipschitz and one smoothness constant per function
    (index 0 is the objective). ``gradient`` is an analytic hook for test
    problems only; the solver never calls it.
    """

    dimension: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    n_constraints: int
    L: np.ndarray
    M: np.ndarray
    name: str = "problem"
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    x0: np.ndarray | None = None
    constraint_names: list[str] | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.n_constraints < 0:
            raise ValueError("constraint count must be >= 0")
        m1 = self.n_constraints + 1
        self.L = np.broadcast_to(np.asarray(self.L, dtype=float), (m1,)).copy()
        self.M = np.broadcast_to(np.asarray(self.M, dtype=float), (m1,)).copy()
        if np.any(self.L <= 0) or np.any(self.M <= 0):
            raise ValueError("smoothness constants L_i, M_i must be > 0")
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, dtype=float)

    @property
    def smoothness(self) -> SmoothnessProfile:
        return SmoothnessProfile.from_problem(self)


@dataclass(frozen=True)
class SmoothnessProfile:
    L_max: float
    M_max: float

    @classmethod
    def from_problem(cls, problem: Problem) -> SmoothnessProfile:
        # constants of the objective do not enter L_max / M_max
        if problem.n_constraints == 0:
            return cls(float(problem.L[0]), float(problem.M[0]))
        return cls(float(np.max(problem.L[1:])), float(np.max(problem.M[1:])))


@dataclass(frozen=True)
class SampleRecord:
    x: np.ndarray
    values: np.ndarray
    purpose: str
    iteration: int

    @property
    def max_constraint(self) -> float:
        return float(np.max(self.values[1:])) if self.values.size > 1 else -np.inf

    @property
    def feasible(self) -> bool:
        return self.max_constraint <= 0.0


@dataclass
class SampleLedger:
    """Append-only record of every sample taken.

    Optionally streams each record as a JSON line to ``stream``.
    """

    records: list[SampleRecord] = field(default_factory=list)
    max_constraint: float = -np.inf
    n_infeasible: int = 0
    stream: IO[str] | None = None
    iteration: int = 0

    def __len__(self) -> int:
        return len(self.records)

    @property
    def count(self) -> int:
        return len(self.records)

    def append(self, x: np.ndarray, values: np.ndarray, purpose: str) -> SampleRecord:
        if purpose not in PURPOSES:
            raise ValueError(f"unknown sample purpose {purpose!r}")
        rec = SampleRecord(np.array(x, dtype=float), np.array(values, dtype=float),
                           purpose, self.iteration)
        self.records.append(rec)
        worst = rec.max_constraint
        self.max_constraint = max(self.max_constraint, worst)
        if worst > 0.0:
            self.n_infeasible += 1
        if self.stream is not None:
            self.stream.write(json.dumps({
                "k": rec.iteration, "purpose": purpose,
                "x": rec.x.tolist(), "values": rec.values.tolist(),
            }) + "\n")
        return rec

    def infeasible_records(self) -> list[SampleRecord]:
        return [r for r in self.records if not r.feasible]


def evaluate(problem: Problem, x, purpose: str, ledger: SampleLedger) -> np.ndarray:
    """Sample all m+1 functions at ``x`` and log the sample."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dimension,):
        raise ValueError(f"x has shape {x.shape}, expected ({problem.dimension},)")
    try:
        values = np.asarray(problem.evaluator(x), dtype=float)
    except OracleError:
        raise
    except Exception as exc:  # evaluator internals are opaque
        raise OracleError(x, f"{type(exc).__name__}: {exc}") from exc
    if values.shape != (problem.n_constraints + 1,):
        raise OracleError(x, f"evaluator returned shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise OracleError(x, "evaluator returned non-finite values")
    ledger.append(x, values, purpose)
    return values


def is_strictly_feasible(values: Sequence[float]) -> bool:
    """True iff every constraint value (indices 1..m) is negative."""
    values = np.asarray(values, dtype=float)
    return bool(np.all(values[1:] < 0.0))
