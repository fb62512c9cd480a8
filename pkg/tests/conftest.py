from __future__ import annotations

import time

import numpy as np
import pytest

SUITE_BUDGET_S = 60.0

_session_start = time.perf_counter()
_acceptance: list[tuple[str, str, str]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20251217)


def pytest_runtest_logreport(report):
    if report.when != "call" or "acceptance" not in report.keywords:
        return
    label = report.head_line or report.nodeid
    _acceptance.append((label, "PASS" if report.passed else "FAIL", report.nodeid))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label, status, _ in sorted(_acceptance):
        tr.write_line(f"{status}  {label}")
    elapsed = time.perf_counter() - _session_start
    status = "PASS" if elapsed < SUITE_BUDGET_S else "FAIL"
    tr.write_line(f"{status}  test_criterion_10_suite_wall_clock ({elapsed:.1f}s < {SUITE_BUDGET_S:.0f}s)")


def pytest_sessionfinish(session, exitstatus):
    if _acceptance and time.perf_counter() - _session_start >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1
