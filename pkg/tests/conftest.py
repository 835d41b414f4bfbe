import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qgate.core import PulseSequence

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

AREA = st.floats(-12 * math.pi, 12 * math.pi, allow_nan=False)
ANGLE = st.floats(-math.pi, math.pi, allow_nan=False)


@st.composite
def sequences(draw, min_pulses=1, max_pulses=6):
    n = draw(st.integers(min_pulses, max_pulses))
    areas = draw(st.lists(AREA, min_size=n, max_size=n))
    phis = draw(st.lists(ANGLE, min_size=n, max_size=n))
    return PulseSequence.from_arrays(areas, phis)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@st.composite
def generic_sequences(draw, min_pulses=1, max_pulses=6):
    """Sequences in which every pulse acts on every block (no zero angles)."""
    n = draw(st.integers(min_pulses, max_pulses))
    mags = draw(st.lists(st.floats(0.01, 12 * math.pi), min_size=n, max_size=n))
    signs = draw(st.lists(st.sampled_from([-1.0, 1.0]), min_size=n, max_size=n))
    offs = draw(st.lists(st.floats(0.01, math.pi / 2 - 0.01), min_size=n, max_size=n))
    quads = draw(st.lists(st.integers(-2, 1), min_size=n, max_size=n))
    return PulseSequence.from_arrays(
        [s * m for s, m in zip(signs, mags)], [o + q * math.pi / 2 for o, q in zip(offs, quads)]
    )


_VERDICTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def verdict(request):
    """Record a one-line PASS/FAIL verdict for the acceptance summary."""

    def record(ok: bool, detail: str) -> None:
        _VERDICTS[request.node.name] = (ok, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_VERDICTS):
        ok, detail = _VERDICTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
