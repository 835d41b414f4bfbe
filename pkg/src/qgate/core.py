"""Domain types shared across the package: structural vectors, pulses,
sequences, subsystems and geometrical-factor constraints.

Conventions
-----------
The first ket slot is qubit A.  A pulse drives qubit A with the geometrical
factor ``a`` and qubit B with ``b``; the structural vector ``(a, b)`` always
has unit norm.  Areas are signed (radians); flipping the sign of both the
area and the structural vector leaves every propagator unchanged.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

NORM_TOL = 1e-12
FILE_NORM_TOL = 1e-9
DEFAULT_AREA_MAX = 12 * math.pi
MAX_PULSES = 6


class ProtocolError(ValueError):
    """Raised for invalid pulses, sequences or protocol files."""


@dataclass(frozen=True)
class StructuralVector:
    """Unit vector of geometrical factors ``(a, b)`` at qubits A and B."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ProtocolError("geometrical factors must be finite")
        if abs(math.hypot(self.a, self.b) - 1.0) > NORM_TOL:
            raise ProtocolError(
                f"structural vector ({self.a}, {self.b}) is not normalized"
            )

    @property
    def phi(self) -> float:
        return math.atan2(self.b, self.a)

    def __neg__(self) -> StructuralVector:
        return StructuralVector(-self.a, -self.b)

    def as_tuple(self) -> tuple[float, float]:
        return (self.a, self.b)


def make_structural_vector(phi: float) -> StructuralVector:
    """Return the structural vector ``(cos phi, sin phi)``."""
    if not math.isfinite(phi):
        raise ProtocolError(f"structural angle must be finite, got {phi}")
    return StructuralVector(math.cos(phi), math.sin(phi))


def dot(e1: StructuralVector, e2: StructuralVector) -> float:
    """Scalar product of two structural vectors."""
    return e1.a * e2.a + e1.b * e2.b


@dataclass(frozen=True)
class Pulse:
    area: float
    e: StructuralVector

    def __post_init__(self):
        if not math.isfinite(self.area):
            raise ProtocolError("pulse area must be finite")

    @classmethod
    def from_angle(cls, area: float, phi: float) -> Pulse:
        return cls(float(area), make_structural_vector(phi))


@dataclass(frozen=True)
class PulseSequence:
    """Ordered, non-overlapping pulses; ``pulses[0]`` is applied first."""

    pulses: tuple[Pulse, ...]

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        if not 1 <= len(self.pulses) <= MAX_PULSES:
            raise ProtocolError(
                f"sequence must have 1..{MAX_PULSES} pulses, got {len(self.pulses)}"
            )

    def __len__(self) -> int:
        return len(self.pulses)

    def __iter__(self):
        return iter(self.pulses)

    def __getitem__(self, k):
        return self.pulses[k]

    @classmethod
    def from_arrays(cls, areas, phis) -> PulseSequence:
        if len(areas) != len(phis):
            raise ProtocolError("areas and phis differ in length")
        return cls(tuple(Pulse.from_angle(A, p) for A, p in zip(areas, phis)))

    @property
    def areas(self) -> list[float]:
        return [p.area for p in self.pulses]

    @property
    def phis(self) -> list[float]:
        return [p.e.phi for p in self.pulses]

    @property
    def total_area(self) -> float:
        return sum(abs(p.area) for p in self.pulses)

    def negated(self) -> PulseSequence:
        """Every pulse replaced by ``(-A, -e)``; physically equivalent."""
        return PulseSequence(tuple(Pulse(-p.area, -p.e) for p in self.pulses))

    def swapped(self) -> PulseSequence:
        """Qubit labels exchanged: ``(a, b) -> (b, a)`` for every pulse."""
        return PulseSequence(
            tuple(Pulse(p.area, StructuralVector(p.e.b, p.e.a)) for p in self.pulses)
        )


class SubsystemId(str, enum.Enum):
    """Decoupled blocks of the blockaded Hamiltonian.

    V spans {|00>, |r0>, |0r>}, A spans {|01>, |r1>}, B spans {|10>, |1r>}.
    """

    V = "V"
    A = "A"
    B = "B"


SUBSYSTEMS = (SubsystemId.V, SubsystemId.A, SubsystemId.B)


class ConstraintMode(str, enum.Enum):
    ABS_B = "abs-b"
    POSITIVE = "positive"
    ABS_BOTH = "abs-both"


@dataclass(frozen=True)
class ConstraintSpec:
    sigma: float = 0.0
    mode: ConstraintMode = ConstraintMode.ABS_B
    area_max: float = DEFAULT_AREA_MAX

    def __post_init__(self):
        object.__setattr__(self, "mode", ConstraintMode(self.mode))
        if not 0.0 <= self.sigma < 1.0:
            raise ProtocolError(f"sigma must lie in [0, 1), got {self.sigma}")
        if self.area_max <= 0:
            raise ProtocolError("area_max must be positive")


def pulse_violations(a: float, b: float, area: float, c: ConstraintSpec) -> list[float]:
    """Non-negative violation amounts of one pulse; all zero iff feasible."""
    s = c.sigma
    if c.mode is ConstraintMode.ABS_B:
        out = [s - abs(b)]
    elif c.mode is ConstraintMode.POSITIVE:
        out = [s - a, s - b]
    else:
        out = [s - abs(a), s - abs(b)]
    out.append(abs(area) - c.area_max)
    return [max(0.0, v) for v in out]


def check_constraints(seq: PulseSequence, c: ConstraintSpec) -> bool:
    """True iff every pulse satisfies the constraint mode and the area bound."""
    return all(
        not any(pulse_violations(p.e.a, p.e.b, p.area, c)) for p in seq
    )


# -- protocol files -------------------------------------------------------


def sequence_from_dict(data: dict) -> PulseSequence:
    """Build a sequence from ``{"pulses": [{"area":..,"phi":..}, ...]}``.

    A pulse may give explicit ``a``/``b`` factors instead of ``phi``; they
    must be normalized within 1e-9 and are renormalized exactly.
    """
    try:
        items = data["pulses"]
    except (KeyError, TypeError):
        raise ProtocolError('protocol must be an object with a "pulses" list') from None
    if not isinstance(items, list):
        raise ProtocolError('"pulses" must be a list')
    pulses = []
    for k, item in enumerate(items):
        if not isinstance(item, dict) or "area" not in item:
            raise ProtocolError(f"pulse {k}: missing area")
        area = float(item["area"])
        if "phi" in item:
            pulses.append(Pulse.from_angle(area, float(item["phi"])))
        elif "a" in item and "b" in item:
            a, b = float(item["a"]), float(item["b"])
            norm = math.hypot(a, b)
            if not math.isfinite(norm) or abs(norm - 1.0) > FILE_NORM_TOL:
                raise ProtocolError(
                    f"pulse {k}: (a, b) = ({a}, {b}) has norm {norm}, not 1"
                )
            pulses.append(Pulse(area, make_structural_vector(math.atan2(b, a))))
        else:
            raise ProtocolError(f"pulse {k}: need phi or both a and b")
    return PulseSequence(tuple(pulses))


def sequence_to_dict(seq: PulseSequence) -> dict:
    return {"pulses": [{"area": p.area, "phi": p.e.phi} for p in seq]}


def read_protocol(path) -> PulseSequence:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON ({exc})") from exc
    return sequence_from_dict(data)


def write_protocol(seq: PulseSequence, path) -> None:
    Path(path).write_text(json.dumps(sequence_to_dict(seq), indent=2) + "\n", encoding="utf-8")


def jaksch_sequence() -> PulseSequence:
    """pi - 2pi - pi with the outer pulses on qubit A and the middle on B."""
    return PulseSequence(
        (
            Pulse(math.pi, StructuralVector(1.0, 0.0)),
            Pulse(2 * math.pi, StructuralVector(0.0, 1.0)),
            Pulse(math.pi, StructuralVector(1.0, 0.0)),
        )
    )
