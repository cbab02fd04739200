"""Shared pytest wiring.

Tests marked ``@pytest.mark.acceptance("<criterion>")`` are gathered into a
PASS/FAIL block — one line per criterion — printed after the normal test
summary, so the acceptance verdict is readable at a glance.
"""

import pytest

_RESULTS: dict[str, bool] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    name = marker.args[0]
    if report.when == "call":
        _RESULTS[name] = _RESULTS.get(name, True) and report.passed
    elif report.failed or report.skipped:
        _RESULTS[name] = False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in _RESULTS.items():
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}")
