import time

import pytest

_RESULTS: dict[int, tuple[str, str, float]] = {}


class CriterionRecorder:
    """Context manager that records pass/fail and wall time of one acceptance criterion."""

    def __init__(self, number: int, title: str, budget: float):
        self.number = number
        self.title = title
        self.budget = budget
        self.detail = ""

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        status = "PASS" if exc_type is None else "FAIL"
        if exc_type is None and elapsed > self.budget:
            status = "FAIL"
        detail = self.detail if exc_type is None else f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        _RESULTS[self.number] = (status, f"{self.title} ({elapsed:.1f} s, budget {self.budget:g} s) {detail}".rstrip(),
                                 elapsed)
        if exc_type is None and elapsed > self.budget:
            pytest.fail(f"criterion {self.number} took {elapsed:.1f} s, budget {self.budget:g} s")
        return False


@pytest.fixture
def criterion():
    return CriterionRecorder


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status, text, _ = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {status} - {text}")
