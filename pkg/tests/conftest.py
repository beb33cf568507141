from fractions import Fraction as F

import pytest

from fairccp.cli import bundled_programs
from fairccp.constraints import ConstraintSystem, SoftConstraint
from fairccp.lang import parse_file
from fairccp.semiring import BOOLEAN, FUZZY


@pytest.fixture
def fuzzy_xy():
    return ConstraintSystem(FUZZY, ("a", "b"), ("x", "y"))


@pytest.fixture
def bool_xy():
    return ConstraintSystem(BOOLEAN, ("a", "b"), ("x", "y"))


@pytest.fixture
def c1_c2(fuzzy_xy):
    """c1 over x and c2 over (x, y) from the combination example."""
    c1 = SoftConstraint.from_rows(fuzzy_xy, ["x"], {("a",): F("0.8"), ("b",): F("0.5")})
    c2 = SoftConstraint.from_rows(
        fuzzy_xy, ["x", "y"],
        {("a", "a"): 1, ("a", "b"): F("0.4"), ("b", "a"): F("0.6"), ("b", "b"): 1},
    )
    return c1, c2


def load(name):
    return parse_file(bundled_programs()[name])


@pytest.fixture
def bundled():
    return load


# -- acceptance reporting ----------------------------------------------------------

_VERDICTS: dict = {}


@pytest.fixture
def verdict():
    """Record one acceptance line; printed together at the end of the session."""

    def record(number, ok, detail):
        _VERDICTS[number] = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        print(_VERDICTS[number])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[n])
