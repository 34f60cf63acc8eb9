import pytest

_RESULTS = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, title, passed, detail)``."""

    def record(number, title, passed, detail=""):
        _RESULTS.append((number, title, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_RESULTS, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {title}  {detail}")
