"""Quantum-pathway decomposition of the return amplitudes.

In the transformed basis each pulse either leaves the initial state alone
(factor c), excites it into the bright state of the pulse (i s), returns an
excitation (i s times an overlap), keeps an excitation in the bright state
(c times an overlap) or, in V only, lets it pass through the dark state.
Ground-to-ground event strings are the pathways; grouping them by their
number of loops and delays gives the 0-, 1-, d- and 2-loop amplitudes whose
sum is the return amplitude.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import MAX_PULSES, ProtocolError, PulseSequence, SubsystemId, SUBSYSTEMS
from .propagator import mixing_angle

GRID_DIVISIONS = 3
# Pulses whose mixing angle in a block is below this are the identity there
# (field absent at that qubit) and take no part in the pathway structure.
IDLE_TOL = 1e-14


class EventKind(str, enum.Enum):
    STAY_GROUND = "G"
    UP = "U"
    DOWN = "D"
    STAY_COUPLED = "C"
    STAY_DARK = "K"
    IDLE = "I"


@dataclass(frozen=True)
class PathwayEvent:
    kind: EventKind
    pulse_index: int


@dataclass(frozen=True)
class Pathway:
    events: tuple[PathwayEvent, ...]
    amplitude: float

    @property
    def loops(self) -> int:
        return sum(ev.kind is EventKind.UP for ev in self.events)

    @property
    def delays(self) -> int:
        return sum(
            ev.kind in (EventKind.STAY_COUPLED, EventKind.STAY_DARK) for ev in self.events
        )

    @property
    def label(self) -> str:
        return "".join(ev.kind.value for ev in self.events)


@dataclass(frozen=True)
class MechanismBuckets:
    u0: float
    u1: float
    ud: float
    u2: float

    @property
    def total(self) -> float:
        return self.u0 + self.u1 + self.ud + self.u2

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.u0, self.u1, self.ud, self.u2)


def _pulse_data(seq: PulseSequence, s: SubsystemId):
    """Per-pulse (c, s, e, idle) in block ``s``; e is a 2-vector for V, 1 otherwise."""
    out = []
    for p in seq:
        th = mixing_angle(p, s)
        e = np.array([p.e.a, p.e.b]) if s is SubsystemId.V else np.array([1.0])
        out.append((math.cos(th), math.sin(th), e, abs(th) <= IDLE_TOL))
    return out


def enumerate_pathways(seq: PulseSequence, s: SubsystemId) -> list[Pathway]:
    """All ground-to-ground pathways of block ``s``.

    The excitation direction v is carried unnormalized (a 2-vector in V, the
    scalar 1 in A and B).  A dark-state passage projects v onto the
    complement of the current bright state and defers the contraction to the
    next event that touches the bright state.
    """
    s = SubsystemId(s)
    if len(seq) > MAX_PULSES:
        raise ProtocolError(f"pathway enumeration limited to {MAX_PULSES} pulses")
    data = _pulse_data(seq, s)
    dark = s is SubsystemId.V
    n = len(data)
    paths: list[Pathway] = []

    def walk(k, events, amp, v):
        # v is None while in the ground state
        if k == n:
            if v is None:
                z = complex(amp)
                if abs(z.imag) > 1e-12:
                    raise ArithmeticError("pathway amplitude is not real")
                paths.append(Pathway(tuple(events), z.real))
            return
        c, sn, e, idle = data[k]
        if idle:
            walk(k + 1, events + [PathwayEvent(EventKind.IDLE, k)], amp, v)
            return
        if v is None:
            walk(k + 1, events + [PathwayEvent(EventKind.STAY_GROUND, k)], amp * c, None)
            walk(k + 1, events + [PathwayEvent(EventKind.UP, k)], amp * 1j * sn, e.copy())
            return
        overlap = float(e @ v)
        walk(k + 1, events + [PathwayEvent(EventKind.DOWN, k)], amp * 1j * sn * overlap, None)
        walk(k + 1, events + [PathwayEvent(EventKind.STAY_COUPLED, k)], amp * c * overlap, e.copy())
        if dark:
            walk(k + 1, events + [PathwayEvent(EventKind.STAY_DARK, k)], amp, v - e * overlap)

    walk(0, [], 1.0 + 0j, None)
    return paths


def classify(path: Pathway) -> str:
    """Bucket name of a pathway: u0, u1 (one loop, no delay), ud or u2."""
    if path.loops == 0:
        return "u0"
    if path.loops == 1:
        return "u1" if path.delays == 0 else "ud"
    return "u2"


def bucket_amplitudes(seq: PulseSequence, s: SubsystemId) -> MechanismBuckets:
    sums = dict.fromkeys(("u0", "u1", "ud", "u2"), 0.0)
    for path in enumerate_pathways(seq, s):
        sums[classify(path)] += path.amplitude
    return MechanismBuckets(**sums)


def closed_form_buckets_4(seq: PulseSequence, s: SubsystemId) -> MechanismBuckets:
    """Four-pulse bucket amplitudes written out term by term.

    Overlaps of structural vectors become 1 in A and B, where the dark-state
    parts ``1 - |e><e|`` of the delay operators are dropped.
    """
    s = SubsystemId(s)
    if len(seq) != 4:
        raise ProtocolError("closed-form buckets need exactly 4 pulses")
    th = [mixing_angle(p, s) for p in seq]
    c = [None] + [math.cos(t) for t in th]
    sn = [None] + [math.sin(t) for t in th]
    if s is SubsystemId.V:
        e = [None] + [np.array([p.e.a, p.e.b]) for p in seq]

        def delay(k):
            # 1 + (c_k - 1)|e_k><e_k|
            return np.eye(2) + (c[k] - 1.0) * np.outer(e[k], e[k])
    else:
        e = [None] + [np.array([1.0])] * 4

        def delay(k):
            return np.array([[c[k]]])

    def ov(i, j):
        return float(e[i] @ e[j])

    u0 = c[4] * c[3] * c[2] * c[1]
    u1 = (
        -sn[4] * ov(4, 3) * sn[3] * c[2] * c[1]
        - c[4] * sn[3] * ov(3, 2) * sn[2] * c[1]
        - c[4] * c[3] * sn[2] * ov(2, 1) * sn[1]
    )
    ud = (
        -sn[4] * float(e[4] @ delay(3) @ e[2]) * sn[2] * c[1]
        - c[4] * sn[3] * float(e[3] @ delay(2) @ e[1]) * sn[1]
        - sn[4] * float(e[4] @ delay(3) @ delay(2) @ e[1]) * sn[1]
    )
    u2 = sn[4] * ov(4, 3) * sn[3] * sn[2] * ov(2, 1) * sn[1]
    return MechanismBuckets(u0, u1, ud, u2)


def fast_v_buckets(areas, a, b) -> tuple[float, float, float, float]:
    """V-block bucket amplitudes by propagating one amplitude per class.

    Ground classes: 0 loops, 1 loop undelayed, 1 loop delayed, >=2 loops.
    Excited classes: first loop undelayed, first loop delayed, >=2 loops.
    Excited amplitudes are i times a real 2-vector.  Equivalent to summing
    the enumerated pathways, in O(N_p) instead of exponential time.
    """
    g = [1.0, 0.0, 0.0, 0.0]
    w = [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
    for A, ak, bk in zip(areas, a, b):
        th = 0.5 * A
        if abs(th) <= IDLE_TOL:
            continue
        c, s = math.cos(th), math.sin(th)
        ew = [ak * v[0] + bk * v[1] for v in w]
        # down: ground class of the excitation's history
        g_new = [
            c * g[0],
            c * g[1] - s * ew[0],
            c * g[2] - s * ew[1],
            c * g[3] - s * ew[2],
        ]
        # up from each ground class
        up = [s * g[0], 0.0, s * (g[1] + g[2] + g[3])]
        # stay (coupled + dark): w + (c - 1) e <e|w>; undelayed becomes delayed
        sx = [v[0] + (c - 1.0) * o * ak for v, o in zip(w, ew)]
        sy = [v[1] + (c - 1.0) * o * bk for v, o in zip(w, ew)]
        w = [
            [up[0] * ak, up[0] * bk],
            [sx[0] + sx[1], sy[0] + sy[1]],
            [sx[2] + up[2] * ak, sy[2] + up[2] * bk],
        ]
        g = g_new
    return tuple(g)


def mechanism_xy(b: MechanismBuckets) -> tuple[float, float]:
    """m-square coordinates, clamped to [-1, 1]."""
    x = b.u0 + b.u1 - b.ud - b.u2
    y = b.u0 + b.ud - b.u1 - b.u2
    return (min(1.0, max(-1.0, x)), min(1.0, max(-1.0, y)))


def _box(t: float, l: int) -> int:
    return min(l, int(math.floor(l * (t + 1.0) / 2.0)) + 1)


def omega_rank(x: float, y: float, l: int = GRID_DIVISIONS) -> int:
    """Rank 1..l*l of the m-square box holding (x, y).

    Pure 0-, 1-, d- and 2-loop mechanisms land in boxes 1, 3, 7 and 9.
    """
    x = min(1.0, max(-1.0, x))
    y = min(1.0, max(-1.0, y))
    return _box(y, l) + l * (_box(x, l) - 1)


@dataclass(frozen=True)
class SubsystemMechanism:
    buckets: MechanismBuckets
    x: float
    y: float
    omega: int


@dataclass(frozen=True)
class MechanismPoint:
    V: SubsystemMechanism
    A: SubsystemMechanism
    B: SubsystemMechanism

    @property
    def cube(self) -> tuple[int, int, int]:
        """m-cube coordinates ordered (omega_A, omega_B, omega_V)."""
        return (self.A.omega, self.B.omega, self.V.omega)

    @property
    def omega_T(self) -> int:
        return self.V.omega + self.A.omega + self.B.omega

    def __getitem__(self, s) -> SubsystemMechanism:
        return getattr(self, SubsystemId(s).value)


def subsystem_mechanism(seq: PulseSequence, s: SubsystemId) -> SubsystemMechanism:
    b = bucket_amplitudes(seq, s)
    x, y = mechanism_xy(b)
    return SubsystemMechanism(b, x, y, omega_rank(x, y))


def mcube_point(seq: PulseSequence) -> MechanismPoint:
    return MechanismPoint(*(subsystem_mechanism(seq, s) for s in SUBSYSTEMS))
