"""Shared test plumbing: the acceptance verdict recorder.

Criterion tests record exactly one PASS/FAIL line each; the lines are
replayed in the terminal summary so they survive output capture.
"""

import pytest

VERDICTS = []


@pytest.fixture
def verdict():
    def record(num: int, ok: bool, detail: str):
        line = f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}"
        VERDICTS.append((num, line))
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(VERDICTS):
        terminalreporter.write_line(line)
