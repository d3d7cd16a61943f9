import re

import pytest

_LINES = []


@pytest.fixture
def ac_report():
    """Record one acceptance line; it is echoed now and again in the summary."""
    def report(n, ok, detail):
        line = f"AC{n} {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _LINES.append(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_LINES, key=lambda s: int(re.match(r"AC(\d+)", s).group(1))):
        terminalreporter.write_line(line)
