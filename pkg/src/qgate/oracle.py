"""Time-domain check of the analytic propagators.

Integrates the Schrodinger equation of the blockaded pair with shaped,
non-overlapping resonant pulses over the eight states that remain when
|rr> is excluded, using fixed-step fourth-order Runge-Kutta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ProtocolError, PulseSequence, SubsystemId
from .propagator import sequence_unitary

BASIS = ("00", "01", "10", "11", "r0", "0r", "r1", "1r")
_IDX = {name: i for i, name in enumerate(BASIS)}
# block -> basis indices in the order used by the analytic propagators
BLOCKS = {
    SubsystemId.V: (_IDX["00"], _IDX["r0"], _IDX["0r"]),
    SubsystemId.A: (_IDX["01"], _IDX["r1"]),
    SubsystemId.B: (_IDX["10"], _IDX["1r"]),
}
NORM_ABORT = 1e-6


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnvelopeSpec:
    """Pulse envelope: ``shape`` is "sin2" or "flat"; durations in time units."""

    shape: str = "sin2"
    duration: float = 1.0
    gap: float = 0.1

    def __post_init__(self):
        if self.shape not in ("sin2", "flat"):
            raise ProtocolError(f"unknown envelope shape {self.shape!r}")
        if self.duration <= 0:
            raise ProtocolError("pulse duration must be positive")
        if self.gap < 0:
            raise ProtocolError("pulses would overlap (negative gap)")

    def rabi(self, area: float, t: float) -> float:
        """Rabi frequency at time ``t`` in [0, duration] of a pulse of ``area``."""
        tau = self.duration
        if self.shape == "flat":
            return area / tau
        # peak 2A/tau makes the integral of sin^2 equal to A
        return 2.0 * area / tau * math.sin(math.pi * t / tau) ** 2


def coupling_matrix(a: float, b: float) -> np.ndarray:
    """Real symmetric M with H(t) = -Omega(t)/2 * M in the 8-state basis."""
    m = np.zeros((8, 8))
    for (i, j), g in (
        (("00", "r0"), a),
        (("00", "0r"), b),
        (("01", "r1"), a),
        (("10", "1r"), b),
    ):
        m[_IDX[i], _IDX[j]] = m[_IDX[j], _IDX[i]] = g
    return m


def integrate_sequence(
    seq: PulseSequence, env: EnvelopeSpec = EnvelopeSpec(), dt: float | None = None
) -> np.ndarray:
    """Propagate all eight basis states through the pulse train.

    Returns the 8x8 matrix whose column j is the final state that started
    in basis state j.  Between pulses the Hamiltonian vanishes, so gaps do
    not change the state.
    """
    tau = env.duration
    if dt is None:
        dt = tau / 1000
    if dt > tau / 200:
        raise ProtocolError(f"step {dt} too coarse; need dt <= duration/200")
    steps = int(math.ceil(tau / dt - 1e-9))
    h = tau / steps
    y = np.eye(8, dtype=complex)
    for p in seq:
        gen = 0.5j * coupling_matrix(p.e.a, p.e.b)  # dy/dt = i Omega/2 M y
        for n in range(steps):
            t = n * h
            w1 = env.rabi(p.area, t)
            w2 = env.rabi(p.area, t + 0.5 * h)
            w4 = env.rabi(p.area, t + h)
            k1 = w1 * (gen @ y)
            k2 = w2 * (gen @ (y + 0.5 * h * k1))
            k3 = w2 * (gen @ (y + 0.5 * h * k2))
            k4 = w4 * (gen @ (y + h * k3))
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        drift = float(np.max(np.abs(np.linalg.norm(y, axis=0) - 1.0)))
        if drift > NORM_ABORT:
            raise IntegrationError(
                f"norm drift {drift:.2e} after pulse with area {p.area:.3f}; "
                f"reduce dt (now {h:.2e}, peak Rabi*dt = {2 * abs(p.area) / tau * h:.3f})"
            )
    return y


def analytic_unitary(seq: PulseSequence) -> np.ndarray:
    """Full 8x8 propagator assembled from the analytic block products."""
    u = np.zeros((8, 8), dtype=complex)
    for s, idx in BLOCKS.items():
        u[np.ix_(idx, idx)] = sequence_unitary(seq, s)
    u[_IDX["11"], _IDX["11"]] = 1.0
    return u


def compare_with_analytic(
    seq: PulseSequence, env: EnvelopeSpec = EnvelopeSpec(), dt: float | None = None
) -> float:
    """Max |integrated - analytic| over all entries of the 8x8 propagator."""
    return float(np.max(np.abs(integrate_sequence(seq, env, dt) - analytic_unitary(seq))))


def envelope_area(area: float, env: EnvelopeSpec, samples: int = 2000) -> float:
    """Numerical time integral of the envelope (Simpson rule)."""
    t = np.linspace(0.0, env.duration, 2 * samples + 1)
    f = np.array([env.rabi(area, ti) for ti in t])
    h = t[1] - t[0]
    return float(h / 3 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum()))
