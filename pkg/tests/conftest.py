import numpy as np
import pytest

from glscatter.fock import FockSpace, ModeSet
from glscatter.geometry import Wedge, standard_warping

# lines recorded by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


MOMENTA = [-1.0, -0.3, 0.4, 1.2]


@pytest.fixture
def modes():
    return ModeSet(2, 1.0, MOMENTA)


@pytest.fixture
def space3(modes):
    return FockSpace(modes, 3)


@pytest.fixture
def wr():
    return Wedge.right(2)


@pytest.fixture
def q1():
    return standard_warping(2, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
