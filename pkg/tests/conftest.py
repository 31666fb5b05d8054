import pytest

_REPORT: list[str] = []


@pytest.fixture
def criterion_report():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def record(number: int, title: str, passed: bool, detail: str) -> None:
        line = f"CRITERION {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        _REPORT.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_REPORT, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
