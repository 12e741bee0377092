"""Safe zeroth-order optimization with LP descent directions (SZO-LP)."""

from .oracle import OracleError, Problem, SampleLedger, SampleRecord, SmoothnessProfile, evaluate
from .solver import (InfeasibleStartError, InvariantError, IterationTrace, RunResult,
                     SolverConfig, kkt_residual, read_trace, run, write_trace)

__version__ = "0.1.0"

__all__ = [
    "InfeasibleStartError", "InvariantError", "IterationTrace", "OracleError", "Problem",
    "RunResult", "SampleLedger", "SampleRecord", "SmoothnessProfile", "SolverConfig",
    "evaluate", "kkt_residual", "read_trace", "run", "write_trace",
]
