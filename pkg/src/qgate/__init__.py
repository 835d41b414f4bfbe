"""Optimal pulse-sequence protocols for blockaded two-qubit CZ gates."""

from .core import (
    ConstraintMode,
    ConstraintSpec,
    Pulse,
    PulseSequence,
    StructuralVector,
    SubsystemId,
    check_constraints,
    dot,
    jaksch_sequence,
    make_structural_vector,
)
from .propagator import fidelity, gate_diagonal, return_amplitude
from .pathways import bucket_amplitudes, mcube_point

__version__ = "0.1.0"
