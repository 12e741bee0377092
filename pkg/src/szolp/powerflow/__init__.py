from .case import CaseError, CaseParseError, CaseValidationError, GridCase, builtin_case, load_case, parse_case
from .opf import OpfDecision, constraint_layout, opf_problem
from .pf import PowerFlowError, PowerFlowSolution, branch_flow, branch_flows, make_ybus, solve_power_flow

__all__ = [
    "CaseError", "CaseParseError", "CaseValidationError", "GridCase", "OpfDecision",
    "PowerFlowError", "PowerFlowSolution", "branch_flow", "branch_flows", "builtin_case",
    "constraint_layout", "load_case", "make_ybus", "opf_problem", "parse_case",
    "solve_power_flow",
]
