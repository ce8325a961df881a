"""Acceptance bookkeeping: one pass/fail line per criterion in the terminal summary."""

import pytest

_DETAILS: dict[int, list[str]] = {}
_OUTCOMES: dict[int, str] = {}
_CRITERIA: dict[str, int] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number): end-to-end acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m:
            _CRITERIA[item.nodeid] = int(m.args[0])


@pytest.fixture
def report(request):
    """Record a human-readable measurement line for the current criterion."""
    number = _CRITERIA.get(request.node.nodeid)

    def write(line: str) -> None:
        _DETAILS.setdefault(number, []).append(line)

    return write


def pytest_runtest_logreport(report):
    number = _CRITERIA.get(report.nodeid)
    if number is None:
        return
    if report.when == "call" or report.outcome != "passed":
        if _OUTCOMES.get(number) != "failed":
            _OUTCOMES[number] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        status = "PASS" if _OUTCOMES[number] == "passed" else "FAIL"
        lines = _DETAILS.get(number, [])
        tr.write_line(f"ACCEPTANCE {number} {status}: {lines[0] if lines else ''}")
        for extra in lines[1:]:
            tr.write_line(f"    {extra}")
