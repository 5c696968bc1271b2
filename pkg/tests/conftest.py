import pytest

_REPORT: dict = {}


@pytest.fixture(scope="session")
def report():
    """record(n, ok, detail) stores one acceptance line per criterion."""
    def record(n: int, ok: bool, detail: str):
        _REPORT[n] = (bool(ok), detail)
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_REPORT):
        ok, detail = _REPORT[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    passed = sum(ok for ok, _ in _REPORT.values())
    terminalreporter.write_line(f"{passed}/{len(_REPORT)} criteria passed")
