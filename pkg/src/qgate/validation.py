"""Self-check suites run by ``qgate validate``.

Each suite returns a list of :class:`Check` rows (name, max deviation,
tolerance).  Random sequences come from a seeded generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PulseSequence, SUBSYSTEMS, jaksch_sequence
from .oracle import EnvelopeSpec, compare_with_analytic, integrate_sequence
from .pathways import bucket_amplitudes, closed_form_buckets_4, mcube_point
from .propagator import fidelity, gate_diagonal, return_amplitude

ORACLE_TOL = 1e-6
EXACT_TOL = 1e-12


@dataclass(frozen=True)
class Check:
    name: str
    deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tol


def random_sequence(rng: np.random.Generator, n: int, area_max: float = 12 * math.pi) -> PulseSequence:
    return PulseSequence.from_arrays(
        rng.uniform(-area_max, area_max, n), rng.uniform(-math.pi, math.pi, n)
    )


def suite_jaksch(trials: int, rng) -> list[Check]:
    seq = jaksch_sequence()
    diag = gate_diagonal(seq)
    point = mcube_point(seq)
    return [
        Check("diagonal", max(abs(u + 1.0) for u in diag.as_tuple()), EXACT_TOL),
        Check("fidelity", abs(1.0 - fidelity(diag).fidelity), EXACT_TOL),
        Check("omega_V == 7", float(point.V.omega != 7), 0.0),
        Check("{omega_A, omega_B} == {1, 3}", float({point.A.omega, point.B.omega} != {1, 3}), 0.0),
    ]


def suite_pathsum(trials: int, rng) -> list[Check]:
    worst = 0.0
    for _ in range(trials):
        seq = random_sequence(rng, int(rng.integers(1, 7)))
        for s in SUBSYSTEMS:
            worst = max(worst, abs(bucket_amplitudes(seq, s).total - return_amplitude(seq, s)))
    return [Check(f"sum of buckets vs return amplitude ({trials} sequences)", worst, EXACT_TOL)]


def suite_closed_form(trials: int, rng) -> list[Check]:
    worst = 0.0
    for _ in range(trials):
        seq = random_sequence(rng, 4)
        for s in SUBSYSTEMS:
            a = closed_form_buckets_4(seq, s).as_tuple()
            b = bucket_amplitudes(seq, s).as_tuple()
            worst = max(worst, max(abs(x - y) for x, y in zip(a, b)))
    return [Check(f"4-pulse closed form vs enumeration ({trials} sequences)", worst, EXACT_TOL)]


def suite_oracle(trials: int, rng) -> list[Check]:
    sin2 = EnvelopeSpec("sin2")
    flat = EnvelopeSpec("flat")
    worst = worst_flat = 0.0
    for _ in range(trials):
        seq = random_sequence(rng, int(rng.integers(1, 5)))
        u = integrate_sequence(seq, sin2)
        worst = max(worst, compare_with_analytic(seq, sin2))
        worst_flat = max(worst_flat, float(np.max(np.abs(u - integrate_sequence(seq, flat)))))
    return [
        Check(f"sin2 envelope vs analytic ({trials} sequences)", worst, ORACLE_TOL),
        Check(f"flat-top vs sin2 envelope ({trials} sequences)", worst_flat, ORACLE_TOL),
    ]


def suite_symmetries(trials: int, rng) -> list[Check]:
    sign = swap = fid = 0.0
    for _ in range(trials):
        seq = random_sequence(rng, int(rng.integers(1, 7)))
        d = gate_diagonal(seq)
        dn = gate_diagonal(seq.negated())
        ds = gate_diagonal(seq.swapped())
        sign = max(sign, max(abs(x - y) for x, y in zip(d.as_tuple(), dn.as_tuple())))
        swap = max(swap, abs(d.uV - ds.uV), abs(d.uA - ds.uB), abs(d.uB - ds.uA))
        f = fidelity(d).fidelity
        fid = max(fid, abs(f - fidelity(dn).fidelity), abs(f - fidelity(ds).fidelity))
    return [
        Check(f"(A, e) -> (-A, -e) ({trials} sequences)", sign, EXACT_TOL),
        Check(f"A <-> B swap ({trials} sequences)", swap, EXACT_TOL),
        Check("fidelity invariance", fid, EXACT_TOL),
    ]


SUITES = {
    "jaksch": (suite_jaksch, 1),
    "pathsum": (suite_pathsum, 1000),
    "closed-form": (suite_closed_form, 1000),
    "oracle": (suite_oracle, 100),
    "symmetries": (suite_symmetries, 500),
}


def run_suite(name: str, trials: int | None = None, seed: int = 0) -> list[Check]:
    fn, default_trials = SUITES[name]
    return fn(default_trials if trials is None else trials, np.random.default_rng(seed))
