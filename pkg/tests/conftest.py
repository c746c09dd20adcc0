import numpy as np
import pytest
from hypothesis import strategies as st

from twinkernel.process import EventSample


def brute_ramlau_hansen(times, status, grid, h, kernel):
    """Direct double loop over grid points and subjects, counting Y by hand."""
    times = np.asarray(times, dtype=float)
    out = np.zeros(len(grid))
    for g, t in enumerate(grid):
        acc = 0.0
        for x, d in zip(times, status):
            if not d:
                continue
            y = sum(1 for z in times if z >= x)
            acc += kernel.eval((t - x) / h) / h / y
        out[g] = acc
    return out


@st.composite
def samples(draw, min_n=1, max_n=40, end=5.0):
    n = draw(st.integers(min_n, max_n))
    times = draw(st.lists(st.floats(0.0, end, allow_nan=False), min_size=n, max_size=n))
    status = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    return EventSample.from_arrays(times, status, end)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
