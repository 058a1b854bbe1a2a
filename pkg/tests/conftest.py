import numpy as np
import pytest

ACCEPTANCE = []


@pytest.fixture
def accept():
    """Record one acceptance criterion result for the terminal summary."""

    def record(number, title, passed, detail=""):
        ACCEPTANCE.append((number, title, bool(passed), detail))
        return passed

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(20260415)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}  {detail}")
