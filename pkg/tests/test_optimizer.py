import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgate.core import ConstraintMode, ConstraintSpec, ProtocolError, check_constraints, jaksch_sequence
from qgate.optimizer import (
    Mechanism,
    OptimizerConfig,
    TargetClass,
    constraint_penalty,
    decode,
    encode,
    feasible_arcs,
    gate_error,
    mechanism_guided_error,
    nelder_mead,
    objective_error,
    run_multistart,
    run_single,
    sample_start,
    start_rng,
)
from qgate.pathways import bucket_amplitudes
from qgate.propagator import branch_fidelity, fidelity, gate_diagonal

JAKSCH = encode(jaksch_sequence())
ZERO3 = np.array([0.0, 0.0, 0.0, 0.3, 1.0, 2.0])


def cfg(**kw):
    kw.setdefault("constraints", ConstraintSpec(0.0))
    return OptimizerConfig(**kw)


class TestObjective:
    def test_jaksch_is_exact(self):
        assert objective_error(JAKSCH, cfg()) == pytest.approx(0.0, abs=1e-15)

    def test_zero_areas(self):
        assert objective_error(ZERO3, cfg()) == pytest.approx(0.75)

    def test_penalty_raises_error(self):
        c = cfg(constraints=ConstraintSpec(0.2, ConstraintMode.ABS_B))
        ok = np.array([1.0, 2.0, 3.0, 0.5, 1.2, 2.5])
        bad = ok.copy()
        bad[3] = math.asin(0.1)  # b = sigma / 2
        assert constraint_penalty(ok, c) == 0.0
        assert objective_error(bad, c) > gate_error(bad, c) + 0.0
        assert objective_error(bad, c) - gate_error(bad, c) == pytest.approx(10 * 0.1**2)

    def test_matches_propagator(self, rng):
        c = cfg(target_class=TargetClass.CZ)
        for _ in range(20):
            x = np.concatenate([rng.uniform(-20, 20, 3), rng.uniform(-3, 3, 3)])
            f = fidelity(gate_diagonal(decode(x))).fidelity
            assert gate_error(x, c) == pytest.approx(1 - f, abs=1e-12)

    def test_jaksch_class_is_one_branch(self, rng):
        for _ in range(20):
            x = np.concatenate([rng.uniform(-20, 20, 3), rng.uniform(-3, 3, 3)])
            g = gate_diagonal(decode(x))
            strict = gate_error(x, cfg())
            assert strict == pytest.approx(1 - branch_fidelity(*g.as_tuple(), "(-,-,-)"), abs=1e-12)
            assert gate_error(x, cfg(target_class="cz")) <= strict + 1e-15


class TestGuided:
    def test_dloop_on_jaksch(self):
        assert mechanism_guided_error(JAKSCH, cfg(target_mechanism="dloop")) == pytest.approx(0, abs=1e-12)

    def test_zero_loop_on_jaksch(self):
        assert mechanism_guided_error(JAKSCH, cfg(target_mechanism="0loop")) == pytest.approx(0.4375)

    def test_one_loop_zero_areas(self):
        assert mechanism_guided_error(ZERO3, cfg(target_mechanism="1loop")) == pytest.approx(0.9375)

    def test_needs_target(self):
        with pytest.raises(ProtocolError):
            mechanism_guided_error(JAKSCH, cfg())

    def test_leakage_penalty(self):
        x = np.array([1.0, 2.0, 3.0, 0.5, 1.2, 2.5])
        b = bucket_amplitudes(decode(x), "V")
        plain = mechanism_guided_error(x, cfg(target_mechanism="1loop"))
        lam = mechanism_guided_error(x, cfg(target_mechanism="1loop", mechanism_penalty=0.5))
        assert lam - plain == pytest.approx(0.5 * (abs(b.u0) + abs(b.ud) + abs(b.u2)))

    def test_corners(self):
        assert [m.corner for m in Mechanism] == [1, 3, 7, 9]


class TestNelderMead:
    def test_parabola(self):
        out = nelder_mead(lambda x: (x[0] - 2.0) ** 2, np.array([0.0]))
        assert out.params[0] == pytest.approx(2.0, abs=1e-6)
        assert out.converged

    def test_rosenbrock(self):
        f = lambda x: 100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2
        out = nelder_mead(f, np.array([-1.2, 1.0]), max_iterations=5000)
        np.testing.assert_allclose(out.params, [1.0, 1.0], atol=1e-4)

    def test_iteration_cap(self):
        f = lambda x: 100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2
        out = nelder_mead(f, np.array([-1.2, 1.0]), max_iterations=5)
        assert out.iterations == 5
        assert not out.converged

    def test_non_finite_aborts(self):
        out = nelder_mead(lambda x: float("nan") if x[0] > 0.1 else -x[0], np.array([0.0]))
        assert not out.converged
        assert math.isfinite(out.error)

    @given(st.integers(0, 2**31 - 1))
    def test_never_worse_than_start(self, seed):
        c = cfg(n_pulses=3, constraints=ConstraintSpec(0.1), max_iterations=200)
        x0 = sample_start(c, np.random.default_rng(seed))
        out = nelder_mead(lambda x: objective_error(x, c), x0, max_iterations=200)
        assert out.error <= objective_error(x0, c)


class TestSampling:
    def test_unconstrained_arc(self):
        assert feasible_arcs(ConstraintSpec(0.0)) == [(-math.pi, math.pi)]

    def test_positive_arc(self):
        ((lo, hi),) = feasible_arcs(ConstraintSpec(0.6, ConstraintMode.POSITIVE))
        assert (lo, hi) == pytest.approx((0.6435, 0.9273), abs=1e-4)

    @pytest.mark.parametrize("mode", [ConstraintMode.POSITIVE, ConstraintMode.ABS_BOTH])
    def test_infeasible_sigma(self, mode):
        with pytest.raises(ProtocolError):
            OptimizerConfig(constraints=ConstraintSpec(0.8, mode))

    @given(
        st.sampled_from(list(ConstraintMode)),
        st.floats(0.0, 0.7),
        st.integers(0, 10**6),
    )
    def test_starts_are_feasible(self, mode, sigma, seed):
        c = OptimizerConfig(n_pulses=4, constraints=ConstraintSpec(sigma, mode))
        x = sample_start(c, start_rng(seed, 3))
        assert check_constraints(decode(x), c.constraints)

    def test_deterministic(self):
        c = OptimizerConfig()
        np.testing.assert_array_equal(
            sample_start(c, start_rng(5, 2)), sample_start(c, start_rng(5, 2))
        )


class TestMultistart:
    def test_count_and_order(self):
        c = cfg(n_pulses=2, n_starts=6, seed=3, max_iterations=50)
        outs = run_multistart(c, threads=1)
        assert [o.start_index for o in outs] == list(range(6))

    def test_independent_of_threads(self):
        c = cfg(n_pulses=2, n_starts=5, seed=9, max_iterations=100)
        a = run_multistart(c, threads=1)
        b = run_multistart(c, threads=2)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.params, y.params)
            assert x.error == y.error

    def test_start_depends_only_on_seed_and_index(self):
        c = cfg(n_pulses=2, n_starts=4, seed=1, max_iterations=80)
        assert run_single(c, 3).error == run_multistart(c, threads=1)[3].error

    def test_dloop_target_finds_jaksch_class(self):
        c = cfg(n_pulses=3, n_starts=40, seed=2, target_mechanism="dloop", area_range=(0.1 * math.pi, 4 * math.pi))
        outs = run_multistart(c, threads=1)
        best = min(outs, key=lambda o: o.error)
        assert best.error <= 1e-6
        assert abs(bucket_amplitudes(best.sequence(), "V").ud) >= 0.99
