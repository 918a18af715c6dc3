"""Shared pytest wiring: the acceptance suite records one verdict line per
criterion and this hook replays them at the end of the run, so the report
survives output capture."""

import pytest

_verdict_lines = []


@pytest.fixture
def verdict():
    """Record a numbered pass/fail line, then assert it."""

    def record(num, ok, detail):
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
        _verdict_lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _verdict_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_verdict_lines):
        terminalreporter.write_line(line)
