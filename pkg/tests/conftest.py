import warnings

import pytest

from qirange.errors import ValidityWarning

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _quiet_validity():
    # the canonical example point sits on the M*n_b = 1 boundary, so most
    # evaluations carry a validity warning; tests that care re-enable it
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        yield


@pytest.fixture
def record_criterion():
    def record(number: int, name: str, passed: bool, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {name}" + (f" ({detail})" if detail else ""))

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
