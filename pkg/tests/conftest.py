"""Pytest wiring: per-criterion pass/fail lines for the acceptance gate."""

ACCEPTANCE_LINES = []


def record_line(line):
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
