import pytest

from painleve_kernel import PiiParameters, solve_hastings_mcleod

_PII = {}
ACCEPTANCE_LINES = []


def pii_for(alpha, s_min=-12.0, s_max=12.0):
    key = (alpha, s_min, s_max)
    if key not in _PII:
        _PII[key] = solve_hastings_mcleod(PiiParameters(alpha, s_min=s_min, s_max=s_max))
    return _PII[key]


@pytest.fixture(scope="session")
def pii():
    return pii_for


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
