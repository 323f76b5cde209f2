import numpy as np
import pytest

from regimedyn.analysis import linearize
from regimedyn.models import collateral_system

X_STAR = np.array([1.0, 1.0])
A_N = np.array([[0.8, 0.4], [0.0, 0.8]])
A_C = np.array([[0.8, 0.0], [0.4, 0.8]])


@pytest.fixture(scope="session")
def collateral():
    return collateral_system()


@pytest.fixture(scope="session")
def collateral_lin(collateral):
    return linearize(collateral, X_STAR)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.LINES:
        terminalreporter.write_line(line)
