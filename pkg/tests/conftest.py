import time
from collections import defaultdict

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SUITE_BUDGET = 300.0

_outcomes: dict[int, list[bool]] = defaultdict(list)
_titles: dict[int, str] = {}
_start = time.perf_counter()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    _titles[number] = title
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes[number].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    elapsed = time.perf_counter() - _start
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        verdict = "PASS" if all(_outcomes[number]) else "FAIL"
        terminalreporter.write_line(f"{verdict} criterion {number:>2}: {_titles[number]}")
    # the runtime budget only means something for a full run
    if len(terminalreporter.stats.get("passed", [])) > 150:
        verdict = "PASS" if elapsed < SUITE_BUDGET else "FAIL"
        terminalreporter.write_line(f"{verdict} suite runtime {elapsed:.0f} s (budget {SUITE_BUDGET:.0f} s)")


def pytest_sessionfinish(session, exitstatus):
    if session.testscollected > 150 and time.perf_counter() - _start > SUITE_BUDGET and exitstatus == 0:
        session.exitstatus = 1
