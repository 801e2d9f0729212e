import pytest

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {status:<4} {detail}")


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion."""
    def record(number, passed, detail, status=None):
        ACCEPTANCE[number] = (status or ("PASS" if passed else "FAIL"), detail)
        print(f"criterion {number}: {ACCEPTANCE[number][0]} {detail}")
    return record
