"""Shared pytest plumbing.

The acceptance tests register one human-readable line per headline check;
captured stdout only surfaces on failure, so re-print the collected lines
in the terminal summary where they are always visible.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
