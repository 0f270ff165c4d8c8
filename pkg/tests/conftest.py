"""Shared test plumbing: collects acceptance-criterion result lines and
prints them as a summary section at the end of the run."""

import pytest

_criterion_lines = []


@pytest.fixture
def criterion_log():
    def log(line):
        _criterion_lines.append(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_criterion_lines):
            terminalreporter.write_line(line)
