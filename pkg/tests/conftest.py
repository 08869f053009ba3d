import pytest

# (criterion, passed, detail) appended by tests/test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[str, str, str]] = []


@pytest.fixture
def record():
    def _record(name: str, ok: bool, detail: str, gating: bool = True) -> bool:
        status = "PASS" if ok else ("FAIL" if gating else "WARN")
        ACCEPTANCE_RESULTS.append((name, status, detail))
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{status}  {name}: {detail}")
