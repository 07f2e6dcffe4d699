import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ccfsim.engine import MissionConfig
from ccfsim.params import AlphaParams, AtwoodParams

# Values as printed in the EDG example (decimal commas normalised).
REF_ALPHA = AlphaParams(m=4, alpha=(9.87e-1, 7.06e-3, 4.55e-3, 1.54e-3), lambda_tot=1.18e-3)
REF_ATWOOD = AtwoodParams(omega=2.04e-6, mu=8.71e-5, rho=4.92e-1, lambda_ind=1.14e-3)


@pytest.fixture
def ref_atwood():
    return REF_ATWOOD


@pytest.fixture
def ref_alpha():
    return REF_ALPHA


@pytest.fixture
def mission():
    return MissionConfig(mission_time=24.0, n_components=4)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
