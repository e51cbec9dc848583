from __future__ import annotations

import os
import re
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))  # make `oracles` importable

from safereach import build_pickup_example


@pytest.fixture(scope="session")
def pickup():
    """(model, initial belief, objective) for the two-hand pick-up choice."""
    return build_pickup_example()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, every run."""
    lines = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            match = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
            if match:
                label = report.nodeid.split("::")[-1]
                lines.append((int(match.group(1)), status.upper(), label))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, label in sorted(lines):
        terminalreporter.write_line(f"criterion {number}: {status}  ({label})")
