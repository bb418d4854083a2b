"""Shared pytest wiring.

Tests in test_acceptance.py carry a ``criterion(number, title)`` marker; this
plugin aggregates their outcomes and prints one PASS/FAIL line per criterion
at the end of the run, so the acceptance status is readable at a glance.
"""

import pytest

_outcomes: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(number, title): ties a test to one numbered acceptance criterion",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _outcomes.setdefault(number, [title, True, False])
    if report.failed or report.skipped:
        entry[1] = False
    if report.when == "call" and report.passed:
        entry[2] = True
    # a criterion passes only if every phase of every covering test passed
    # and at least one covering test actually ran


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        title, clean, ran = _outcomes[number]
        status = "PASS" if (clean and ran) else "FAIL"
        terminalreporter.write_line(f"criterion {number:02d}  {title:<60} {status}")
