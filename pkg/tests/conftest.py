import pytest

ACCEPTANCE: list[tuple[int, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line, print it, then assert it."""

    def record(number: int, ok: bool, text: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {text}"
        ACCEPTANCE.append((number, ok, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
