import re

_CRITERION_RE = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion."""
    lines = {}
    for status, reports in terminalreporter.stats.items():
        if status not in ("passed", "failed", "skipped"):
            continue
        for report in reports:
            if getattr(report, "when", "call") not in ("call", "setup"):
                continue
            match = _CRITERION_RE.search(report.nodeid)
            if match:
                num, slug = int(match.group(1)), match.group(2)
                lines[num] = (slug, status.upper())
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(lines):
        slug, status = lines[num]
        terminalreporter.write_line(
            f"criterion {num:2d} [{slug}]: {status}")
