"""Shared test plumbing: acceptance-criterion result lines."""

from __future__ import annotations

CRITERION_LINES: list[str] = []


def report_criterion(number: int, ok: bool, detail: str) -> bool:
    """Record one acceptance-criterion outcome for the terminal summary."""
    line = f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'} — {detail}"
    CRITERION_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES):
            terminalreporter.write_line(line)
