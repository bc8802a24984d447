import math

import pytest

from atomsched.bench import ccz_showcase_circuit
from atomsched.circuit import MCZ, Circuit, SingleQubit
from atomsched.device import TimingParams


def R(q, theta=math.pi / 2, phi=0.0):
    return SingleQubit(q, theta, phi)


def CZ(a, b):
    return MCZ((a, b))


@pytest.fixture
def unit_timing():
    return TimingParams()


@pytest.fixture
def showcase():
    return ccz_showcase_circuit()


@pytest.fixture
def single_cz():
    return Circuit(2, (CZ(0, 1),))


# one line per acceptance criterion, repeated at the end of the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
