"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    number = getattr(report, "acceptance_number", None)
    if number is None:
        return
    entry = _ACCEPTANCE.setdefault(number, {"passed": True, "tests": []})
    if report.when == "call" or report.outcome != "passed":
        if report.outcome != "passed":
            entry["passed"] = False
        if report.when == "call" or report.outcome == "failed":
            entry["tests"].append((report.nodeid.split("::")[-1], report.outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result().acceptance_number = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[number]
        status = "PASS" if entry["passed"] else "FAIL"
        detail = ", ".join(f"{name}={outcome}" for name, outcome in entry["tests"])
        terminalreporter.write_line(f"criterion {number}: {status}  ({detail})")
