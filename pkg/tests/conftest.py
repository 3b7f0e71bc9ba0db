import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, title, passed, detail)``."""

    def record(n: int, title: str, passed: bool, detail: str = "") -> bool:
        line = f"criterion {n:>2} {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        _ACCEPTANCE[n] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])
