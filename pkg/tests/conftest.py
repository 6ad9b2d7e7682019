import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion():
    """``criterion(name, failures, detail)`` records one pass/fail line and
    fails the test when ``failures`` is nonempty."""

    def record(name: str, failures: list[str], detail: str = "") -> None:
        verdict = "PASS" if not failures else "FAIL"
        line = f"{verdict} {name}"
        if detail:
            line += f" ({detail})"
        if failures:
            line += f": {failures[0]}" + (f" (+{len(failures) - 1} more)" if len(failures) > 1 else "")
        _LINES.append(line)
        print(line)
        assert not failures, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
