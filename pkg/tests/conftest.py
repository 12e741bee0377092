import numpy as np
import pytest

from szolp.powerflow import builtin_case, opf_problem
from szolp.solver import SolverConfig, run

# Reference cost of the 30-bus OPF and the run configuration used for it.
REFERENCE_COST = 800.14
OPF_CONFIG = SolverConfig(eps0=0.05, eps_min=1e-6, k_switch=200)


@pytest.fixture(scope="session")
def case30():
    return builtin_case("case30")


@pytest.fixture(scope="session")
def opf30(case30):
    return opf_problem(case30, L=0.5, M=0.13)


@pytest.fixture(scope="session")
def opf_run(opf30):
    """One full OPF run shared by every test that needs it (a few minutes)."""
    return run(opf30, config=OPF_CONFIG)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance verdicts, filled in by test_acceptance.py and echoed at the end
# of the session so that a plain `pytest` run lists one line per criterion.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
