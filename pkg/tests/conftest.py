import time
from contextlib import contextmanager

import pytest

_RESULTS: dict[int, tuple[str, str]] = {}


@pytest.fixture
def criterion():
    """Context manager that times a numbered acceptance criterion and records its outcome."""

    @contextmanager
    def run(number: int, limit: float):
        start = time.perf_counter()
        try:
            yield
            elapsed = time.perf_counter() - start
            assert elapsed < limit, f"took {elapsed:.2f} s, limit {limit} s"
        except BaseException as exc:
            lines = [line.strip() for line in str(exc).splitlines() if line.strip()]
            _RESULTS[number] = ("FAIL", lines[0] if lines else type(exc).__name__)
            raise
        _RESULTS[number] = ("PASS", f"{time.perf_counter() - start:.2f} s")

    return run


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status, detail = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {status} ({detail})")
