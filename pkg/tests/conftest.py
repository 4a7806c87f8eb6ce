"""Shared pytest hooks: consolidated acceptance-criteria report."""

import re

_CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion that ran."""
    outcomes = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            match = _CRITERION.search(getattr(report, "nodeid", ""))
            if match:
                num = int(match.group(1))
                if label == "FAIL" or num not in outcomes:
                    outcomes[num] = label
    if outcomes:
        terminalreporter.write_sep("=", "acceptance criteria")
        for num in sorted(outcomes):
            terminalreporter.write_line(f"[ACCEPTANCE] #{num}: {outcomes[num]}")
