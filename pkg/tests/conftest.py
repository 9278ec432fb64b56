import sys

import pytest

from convasym.density import burgess, uniform
from convasym.zeros import StripSpec, enumerate_strip

# values computed once by an independent mpmath oracle (30 digits), frozen here
FIRST_ZERO = complex(31.720909427740061, -2.2605599857401995)
BURGESS_AT_MINUS_I = 1.2179106354188104


@pytest.fixture(scope="session")
def bd():
    return burgess(0.25)


@pytest.fixture(scope="session")
def ud():
    return uniform(1.0, 2.0)


@pytest.fixture(scope="session")
def zeros_c6(bd):
    return enumerate_strip(bd, StripSpec(c=6.0, R=200.0))


@pytest.fixture(scope="session")
def zeros_c20(bd):
    return enumerate_strip(bd, StripSpec(c=20.0, R=400.0))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.summary_lines():
            terminalreporter.write_line(line)
