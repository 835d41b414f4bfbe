import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgate.core import (
    ConstraintMode,
    ConstraintSpec,
    Pulse,
    ProtocolError,
    PulseSequence,
    StructuralVector,
    check_constraints,
    dot,
    jaksch_sequence,
    make_structural_vector,
    read_protocol,
    sequence_from_dict,
    sequence_to_dict,
    write_protocol,
)

from conftest import ANGLE, sequences


def _one(a, b, area=math.pi):
    return PulseSequence((Pulse(area, StructuralVector(a, b)),))


class TestStructuralVector:
    @pytest.mark.parametrize(
        "phi, expected",
        [(0.0, (1.0, 0.0)), (math.pi / 2, (0.0, 1.0)), (math.pi / 4, (0.7071067811865476,) * 2)],
    )
    def test_axis_cases(self, phi, expected):
        e = make_structural_vector(phi)
        assert e.as_tuple() == pytest.approx(expected, abs=1e-15)

    def test_rejects_unnormalized(self):
        with pytest.raises(ProtocolError):
            StructuralVector(0.6, 0.6)

    def test_rejects_nan(self):
        with pytest.raises(ProtocolError):
            StructuralVector(float("nan"), 1.0)

    @pytest.mark.parametrize(
        "e1, e2, expected",
        [((1, 0), (0, 1), 0.0), ((1, 0), (1, 0), 1.0), ((0.6, 0.8), (0.8, 0.6), 0.96)],
    )
    def test_dot(self, e1, e2, expected):
        assert dot(StructuralVector(*e1), StructuralVector(*e2)) == pytest.approx(expected, abs=1e-15)

    @given(ANGLE, ANGLE)
    def test_dot_is_cosine_of_angle_difference(self, p, q):
        assert dot(make_structural_vector(p), make_structural_vector(q)) == pytest.approx(
            math.cos(p - q), abs=1e-12
        )


class TestSequence:
    def test_length_bounds(self):
        with pytest.raises(ProtocolError):
            PulseSequence(())
        with pytest.raises(ProtocolError):
            PulseSequence.from_arrays([1.0] * 7, [0.0] * 7)

    def test_total_area_uses_magnitudes(self):
        seq = PulseSequence.from_arrays([math.pi, -2 * math.pi], [0.0, 0.0])
        assert seq.total_area == pytest.approx(3 * math.pi)

    @given(sequences())
    def test_negated_twice_is_identity(self, seq):
        back = seq.negated().negated()
        assert back.areas == seq.areas
        for p, q in zip(back, seq):
            assert p.e.as_tuple() == pytest.approx(q.e.as_tuple(), abs=1e-15)


class TestConstraints:
    def test_small_b_fails_abs_b(self):
        a = math.sqrt(1 - 0.05**2)
        assert not check_constraints(_one(a, 0.05), ConstraintSpec(0.1, ConstraintMode.ABS_B))

    def test_negative_a_fails_positive(self):
        assert not check_constraints(_one(-0.6, 0.8), ConstraintSpec(0.1, ConstraintMode.POSITIVE))

    def test_large_b_passes_abs_b(self):
        assert check_constraints(_one(0.6, 0.8), ConstraintSpec(0.6, ConstraintMode.ABS_B))

    def test_area_bound(self):
        c = ConstraintSpec(0.0, ConstraintMode.ABS_B, area_max=2 * math.pi)
        assert check_constraints(_one(1, 0, 2 * math.pi), c)
        assert not check_constraints(_one(1, 0, -2.1 * math.pi), c)

    @pytest.mark.parametrize("sigma", [-0.1, 1.0, 1.5])
    def test_sigma_range(self, sigma):
        with pytest.raises(ProtocolError):
            ConstraintSpec(sigma)

    def test_jaksch_is_feasible_only_without_floor(self):
        assert check_constraints(jaksch_sequence(), ConstraintSpec(0.0))
        assert not check_constraints(jaksch_sequence(), ConstraintSpec(0.1))


class TestProtocolFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "p.json"
        write_protocol(jaksch_sequence(), path)
        seq = read_protocol(path)
        assert seq.areas == jaksch_sequence().areas

    def test_explicit_factors(self):
        seq = sequence_from_dict({"pulses": [{"area": 1.0, "a": 0.6, "b": 0.8}]})
        assert seq[0].e.as_tuple() == pytest.approx((0.6, 0.8), abs=1e-15)

    def test_explicit_factors_must_be_normalized(self):
        with pytest.raises(ProtocolError):
            sequence_from_dict({"pulses": [{"area": 1.0, "a": 0.6, "b": 0.8 + 1e-8}]})

    @pytest.mark.parametrize(
        "data",
        [{}, {"pulses": "x"}, {"pulses": [{"phi": 0}]}, {"pulses": [{"area": 1}]}, []],
    )
    def test_malformed(self, data):
        with pytest.raises(ProtocolError):
            sequence_from_dict(data)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ProtocolError):
            read_protocol(path)

    @given(sequences())
    def test_dict_round_trip(self, seq):
        back = sequence_from_dict(json.loads(json.dumps(sequence_to_dict(seq))))
        assert back.areas == seq.areas
        assert back.phis == pytest.approx(seq.phis, abs=1e-15)
