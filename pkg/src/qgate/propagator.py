"""Analytic propagators of the blockaded two-qubit system.

Each resonant pulse acts on the three decoupled blocks V, A and B through a
closed-form unitary that depends only on the pulse area and its structural
vector.  The gate is diagonal in the computational basis when every block
returns to its initial state, so only the (1,1) element of each block's
time-ordered product matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Pulse, PulseSequence, SubsystemId, SUBSYSTEMS

IMAG_TOL = 1e-10

# Local-phase branches of the CZ class, as sign patterns of (uV, uA, uB).
# F = |uV + sA*uA + sB*uB + s11|^2 / 16 for each branch (sA, sB, s11).
BRANCHES = {
    "(-,-,-)": (1.0, 1.0, -1.0),
    "(-,+,+)": (-1.0, -1.0, -1.0),
    "(+,-,+)": (-1.0, 1.0, 1.0),
    "(+,+,-)": (1.0, -1.0, 1.0),
}
JAKSCH_BRANCH = "(-,-,-)"


def mixing_angle(p: Pulse, s: SubsystemId) -> float:
    """Half the generalized pulse area of ``p`` in subsystem ``s``."""
    s = SubsystemId(s)
    if s is SubsystemId.V:
        return 0.5 * p.area
    if s is SubsystemId.A:
        return 0.5 * p.e.a * p.area
    return 0.5 * p.e.b * p.area


def pulse_unitary(p: Pulse, s: SubsystemId) -> np.ndarray:
    """Single-pulse propagator of a subsystem block.

    V is ordered (|00>, |r0>, |0r>), A is (|01>, |r1>) and B is (|10>, |1r>).
    """
    s = SubsystemId(s)
    th = mixing_angle(p, s)
    c, sn = math.cos(th), math.sin(th)
    if s is not SubsystemId.V:
        return np.array([[c, 1j * sn], [1j * sn, c]], dtype=complex)
    a, b = p.e.a, p.e.b
    return np.array(
        [
            [c, 1j * a * sn, 1j * b * sn],
            [1j * a * sn, a * a * c + b * b, a * b * (c - 1.0)],
            [1j * b * sn, a * b * (c - 1.0), b * b * c + a * a],
        ],
        dtype=complex,
    )


def sequence_unitary(seq: PulseSequence, s: SubsystemId) -> np.ndarray:
    """Time-ordered product U_Np ... U_2 U_1 of one block."""
    u = None
    for p in seq:
        step = pulse_unitary(p, s)
        u = step if u is None else step @ u
    return u


def return_amplitude(seq: PulseSequence, s: SubsystemId) -> float:
    """Amplitude of returning to the initial computational state of block ``s``.

    Every contributing path carries an even number of factors of i, so the
    amplitude is real; a residual imaginary part signals an internal error.
    """
    z = sequence_unitary(seq, s)[0, 0]
    if abs(z.imag) > IMAG_TOL:
        raise ArithmeticError(
            f"return amplitude of {SubsystemId(s).value} has imaginary part {z.imag:.3e}"
        )
    return float(z.real)


@dataclass(frozen=True)
class GateDiagonal:
    """Computational-basis diagonal (uV, uA, uB, 1) of the gate."""

    uV: float
    uA: float
    uB: float
    u11: float = 1.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.uV, self.uA, self.uB)

    def __getitem__(self, s) -> float:
        return getattr(self, "u" + SubsystemId(s).value)


def gate_diagonal(seq: PulseSequence) -> GateDiagonal:
    return GateDiagonal(*(return_amplitude(seq, s) for s in SUBSYSTEMS))


@dataclass(frozen=True)
class FidelityResult:
    fidelity: float
    branch: str

    @property
    def error(self) -> float:
        return 1.0 - self.fidelity


def branch_fidelity(uV: float, uA: float, uB: float, branch: str = JAKSCH_BRANCH) -> float:
    sA, sB, s11 = BRANCHES[branch]
    return (uV + sA * uA + sB * uB + s11) ** 2 / 16.0


def fidelity(g: GateDiagonal, branches=None) -> FidelityResult:
    """Trace fidelity with CZ maximized over local Z phases.

    For a real diagonal the optimum over local and global phases is attained
    at one of four sign patterns of ``(uV, uA, uB)``; ``branches`` restricts
    the maximization to a subset of them (default: all four).
    """
    names = list(BRANCHES) if branches is None else list(branches)
    best = max(names, key=lambda n: branch_fidelity(g.uV, g.uA, g.uB, n))
    f = branch_fidelity(g.uV, g.uA, g.uB, best)
    return FidelityResult(min(1.0, f), best)


def fast_diagonal(areas, a, b) -> tuple[float, float, float]:
    """Return amplitudes (uV, uA, uB) from plain float lists.

    Hot path of the optimizer.  V is propagated in the real representation
    ground = g, excited = i*(w0, w1); A and B are rotations about a common
    axis, so their amplitudes are cosines of the summed mixing angles.
    """
    g, w0, w1 = 1.0, 0.0, 0.0
    tA = tB = 0.0
    for A, ak, bk in zip(areas, a, b):
        th = 0.5 * A
        c, s = math.cos(th), math.sin(th)
        ew = ak * w0 + bk * w1
        shift = s * g + (c - 1.0) * ew
        g = c * g - s * ew
        w0 += shift * ak
        w1 += shift * bk
        tA += ak * th
        tB += bk * th
    return g, math.cos(tA), math.cos(tB)
