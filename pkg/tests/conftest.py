import pytest

_ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """Store one summary line per acceptance criterion."""
    def _record(n, ok, detail):
        _ACCEPTANCE[n] = f"[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}"
        print(_ACCEPTANCE[n])
        assert ok, detail
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])
