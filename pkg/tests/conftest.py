import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from smartmars.clock import VirtualClock  # noqa: E402

_ACCEPTANCE = []


@pytest.fixture
def vclock():
    clock = VirtualClock()
    yield clock
    clock.close()


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = dict(report.keywords).get("acceptance")
    if not marker:
        return
    for name, value in report.user_properties:
        if name == "criterion":
            _ACCEPTANCE.append((value, report.passed, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), passed, duration in sorted(_ACCEPTANCE):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} {verdict} ({duration:.2f}s) {title}")
