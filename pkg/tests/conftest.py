"""Prints one PASS/FAIL line per acceptance criterion at the end of a run."""

_acceptance_lines = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if name.startswith("test_"):
        name = name[len("test_"):]
    if report.passed:
        outcome = "PASS"
    elif report.skipped:
        outcome = "SKIP"
    else:
        outcome = "FAIL"
    _acceptance_lines.append(f"[acceptance] {name}: {outcome}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
