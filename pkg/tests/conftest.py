import numpy as np
import pytest

from rmadapt.numerics import RngStream


@pytest.fixture
def rng():
    return RngStream(20110901, 0)


def binomial_band(p, n, k=5.0):
    half = k * np.sqrt(p * (1 - p) / n)
    return p - half, p + half


_RESULTS_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line and fail the test if the check did not pass."""
    def record(label, ok, detail=""):
        line = f"{label}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        request.config.stash[_RESULTS_KEY].append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_RESULTS_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
