import pytest

_RESULTS: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(number, title, passed, detail)."""
    def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        _RESULTS.append((number, title, bool(passed), detail))
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_RESULTS, key=lambda r: r[0]):
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{mark}] {number}. {title}: {detail}")
