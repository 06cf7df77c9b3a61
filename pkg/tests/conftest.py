import functools
import time

import pytest

from matchsim import SeedSpec, derive_stream, sample_explicit
from matchsim.analysis import count_likes
from matchsim.experiments import SweepSpec, run_sweep

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the assertion itself stays in the test."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((name, passed, detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {name} {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def stream():
    return derive_stream(SeedSpec(2024, 0))


LIKING_DEPTH = 124  # floor(18 ln 1000)


@pytest.fixture(scope="session")
def liking_counts():
    """Per-doctor like counts for fifty n=1000, m=1001 instances on a fixed seed set.

    Only the counts are kept; a full instance of this size is tens of megabytes.
    """
    return [
        count_likes(sample_explicit(1000, 1001, derive_stream(SeedSpec(8_000, i))), LIKING_DEPTH)
        for i in range(50)
    ]


SWEEP_SEED = 20_250
SWEEP_SECONDS: dict[tuple[int, int, int], float] = {}


@functools.cache
def _sweep_row(n: int, imbalance: int, trials: int = 20):
    start = time.perf_counter()
    (row,) = run_sweep(SweepSpec(n_values=(n,), imbalance=imbalance, trials=trials, seed=SWEEP_SEED))
    SWEEP_SECONDS[n, imbalance, trials] = time.perf_counter() - start
    return row


@pytest.fixture(scope="session")
def sweep_row():
    """Doctor-proposal sweep rows on a fixed master seed, computed once per session."""
    return _sweep_row
