import numpy as np
import pytest

CRITERIA: list = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary is printed at the end of the run."""

    def record(number, ok, detail):
        CRITERIA.append((number, bool(ok), detail))
        assert ok, f"criterion {number} failed: {detail}"

    def skip(number, reason):
        CRITERIA.append((number, None, reason))
        pytest.skip(reason)

    record.skip = skip
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"[{'SKIP' if ok is None else 'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}")
