import numpy as np
import pytest
from hypothesis import strategies as st

from weakphase.state import BlochVector, PureState, basis, haar_random_state

SQ2 = np.sqrt(2.0)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
phases = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


def random_states(rng, d, k):
    return [haar_random_state(d, int(rng.integers(2**32))) for _ in range(k)]


def random_bloch(rng):
    v = rng.standard_normal(3)
    return BlochVector.normalized(v)


def min_pairwise_overlap(states):
    return min(
        abs(np.vdot(s.amplitudes, t.amplitudes))
        for i, s in enumerate(states)
        for t in states[i + 1 :]
    )


def girard_solid_angle(a, b, c):
    """Signed spherical excess from the three vertex angles (independent oracle)."""
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))

    def corner(p, q, r):
        tq = q - np.dot(p, q) * p
        tr = r - np.dot(p, r) * p
        return np.arctan2(np.linalg.norm(np.cross(tq, tr)), np.dot(tq, tr))

    excess = corner(a, b, c) + corner(b, c, a) + corner(c, a, b) - np.pi
    return np.sign(np.dot(a, np.cross(b, c))) * excess


@pytest.fixture
def octant():
    """A = |0>, B = |+>, C = |+i>: Bloch vertices z, x, y."""
    return (
        basis(2, 0),
        PureState(np.array([1.0, 1.0]) / SQ2),
        PureState(np.array([1.0, 1.0j]) / SQ2),
    )


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
