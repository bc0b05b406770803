"""Shared pytest plumbing: per-criterion summary for the acceptance suite."""

import pytest

_ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or item.fspath.basename != "test_acceptance.py":
        return
    doc = item.function.__doc__
    label = doc.strip().splitlines()[0] if doc else item.name
    _ACCEPTANCE_RESULTS.append((label, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {label}")
