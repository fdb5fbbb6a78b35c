import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from mtsc.prob import JointPMF

settings.register_profile(
    "mtsc", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("mtsc")


@st.composite
def pmfs(draw, shape=None, max_axes=3, max_size=3, allow_zeros=True):
    """Random JointPMF; a few cells may be exactly zero."""
    if shape is None:
        k = draw(st.integers(1, max_axes))
        shape = tuple(draw(st.integers(1, max_size)) for _ in range(k))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    m = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    if allow_zeros and draw(st.booleans()):
        m = np.where(rng.random(shape) < 0.3, 0.0, m)
        if m.sum() == 0:
            m.flat[0] = 1.0
    return JointPMF.normalized(m)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line; lines are echoed and repeated in the terminal summary."""
    def emit(number: int, ok: bool, text: str):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {text}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
