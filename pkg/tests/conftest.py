import pytest

# (criterion, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def report():
    def record(criterion: str, passed: bool, detail: str) -> None:
        ACCEPTANCE.append((criterion, bool(passed), detail))
        print(f"[criterion {criterion}] {'PASS' if passed else 'FAIL'}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"criterion {criterion:<3} {'PASS' if passed else 'FAIL'}  {detail}")
