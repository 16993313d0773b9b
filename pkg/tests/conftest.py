import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from simtri.matcore import NumericalWarning

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_numerical_warnings():
    # near-threshold decisions are reported as warnings; tests assert on results
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NumericalWarning)
        yield


_entries = st.floats(min_value=-4, max_value=4, allow_nan=False, allow_infinity=False, width=32)


@st.composite
def complex_matrices(draw, min_dim=1, max_dim=5, dim=None):
    """Complex square matrices with moderate entries."""
    n = dim if dim is not None else draw(st.integers(min_dim, max_dim))
    re = draw(arrays(np.float64, (n, n), elements=_entries))
    im = draw(arrays(np.float64, (n, n), elements=_entries))
    return re + 1j * im


@st.composite
def matrix_pairs(draw, min_dim=1, max_dim=5):
    n = draw(st.integers(min_dim, max_dim))
    return draw(complex_matrices(dim=n)), draw(complex_matrices(dim=n))


@st.composite
def seeded_rngs(draw):
    return np.random.default_rng(draw(st.integers(0, 2**32 - 1)))


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def E(n, i, j):
    """Matrix unit with a one in row ``i``, column ``j`` (zero based)."""
    M = np.zeros((n, n), dtype=complex)
    M[i, j] = 1
    return M


_acceptance_key = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, passed, detail)``; the lines are printed in the terminal summary."""
    log = request.config.stash.setdefault(_acceptance_key, [])

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        log.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_acceptance_key, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
