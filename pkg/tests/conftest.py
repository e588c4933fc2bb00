import pytest

_ACCEPTANCE = []


@pytest.fixture
def verdict():
    """Record one acceptance line, then assert it."""

    def record(number, title, ok, detail=""):
        _ACCEPTANCE.append((number, f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"))
        assert ok, f"criterion {number}: {title} -- {detail}"

    return record


@pytest.fixture
def note():
    """Record an informational line that is not a pass/fail verdict."""

    def record(number, text):
        _ACCEPTANCE.append((number, f"[INFO] criterion {number:>2}: {text}"))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE, key=lambda item: item[0]):
        terminalreporter.write_line(line)
