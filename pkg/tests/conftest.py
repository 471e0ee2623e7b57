import numpy as np
import pytest
from hypothesis import strategies as st

from phaseprobe.fock import FockVector

# filled by tests/test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES: dict = {}


def random_state(rng: np.random.Generator, n_trunc: int, real: bool = False) -> FockVector:
    amps = rng.normal(size=n_trunc)
    if not real:
        amps = amps + 1j * rng.normal(size=n_trunc)
    return FockVector(amps / np.linalg.norm(amps))


@st.composite
def fock_states(draw, min_size=1, max_size=24):
    n = draw(st.integers(min_size, max_size))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_state(np.random.default_rng(seed), n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
