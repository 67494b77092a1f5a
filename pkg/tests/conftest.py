import hypothesis
import numpy as np
import pytest

from cellmap.core import Fingerprint, Position

hypothesis.settings.register_profile("fast", max_examples=20)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False)

np.seterr(all="warn")


def fp(x, y, **readings):
    return Fingerprint(Position(x, y), readings)


@pytest.fixture
def two_tower_line():
    """(0,0)->[10], (4,0)->[20] on a single tower."""
    return [fp(0.0, 0.0, T1=10), fp(4.0, 0.0, T1=20)]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
