"""Constrained Nelder-Mead search for CZ protocols.

A protocol with N_p pulses is the parameter vector
``[A_1 .. A_Np, phi_1 .. phi_Np]``: signed areas followed by structural
angles, ``(a, b) = (cos phi, sin phi)``.  Geometrical-factor constraints
become arcs of admissible angles; the simplex search handles them with a
quadratic penalty while starting points are always drawn feasible.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    DEFAULT_AREA_MAX,
    MAX_PULSES,
    ConstraintMode,
    ConstraintSpec,
    ProtocolError,
    PulseSequence,
    pulse_violations,
)
from .pathways import fast_v_buckets
from .propagator import BRANCHES, JAKSCH_BRANCH, branch_fidelity, fast_diagonal

AREA_STEP = 0.25
ANGLE_STEP = 0.1


class Mechanism(str, enum.Enum):
    ZERO_LOOP = "0loop"
    ONE_LOOP = "1loop"
    D_LOOP = "dloop"
    TWO_LOOP = "2loop"

    @property
    def bucket_index(self) -> int:
        return list(Mechanism).index(self)

    @property
    def corner(self) -> int:
        """omega rank of the pure mechanism."""
        return (1, 3, 7, 9)[self.bucket_index]


class TargetClass(str, enum.Enum):
    """Which diagonals count as the target gate.

    JAKSCH demands (uV, uA, uB) = (-1, -1, -1), i.e. every subsystem returns
    with a sign flip, as in the pi-2pi-pi protocol.  CZ accepts the whole
    local-phase class (four sign patterns).
    """

    JAKSCH = "jaksch"
    CZ = "cz"

    @property
    def branches(self) -> tuple[str, ...]:
        return (JAKSCH_BRANCH,) if self is TargetClass.JAKSCH else tuple(BRANCHES)


@dataclass(frozen=True)
class OptimizerConfig:
    n_pulses: int = 3
    constraints: ConstraintSpec = field(default_factory=ConstraintSpec)
    n_starts: int = 100
    seed: int = 0
    area_range: tuple[float, float] = (0.1 * math.pi, DEFAULT_AREA_MAX)
    max_iterations: Optional[int] = None
    convergence_tol: float = 1e-12
    penalty_weight: float = 10.0
    target_mechanism: Optional[Mechanism] = None
    mechanism_penalty: float = 0.0
    target_class: TargetClass = TargetClass.JAKSCH

    def __post_init__(self):
        if not 1 <= self.n_pulses <= MAX_PULSES:
            raise ProtocolError(f"n_pulses must be in 1..{MAX_PULSES}")
        if self.n_starts < 1:
            raise ProtocolError("n_starts must be >= 1")
        if self.convergence_tol <= 0:
            raise ProtocolError("convergence_tol must be positive")
        lo, hi = self.area_range
        if not lo < hi:
            raise ProtocolError("empty area range")
        if self.target_mechanism is not None:
            object.__setattr__(self, "target_mechanism", Mechanism(self.target_mechanism))
        object.__setattr__(self, "target_class", TargetClass(self.target_class))
        feasible_arcs(self.constraints)

    @property
    def dimension(self) -> int:
        return 2 * self.n_pulses

    @property
    def iteration_limit(self) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return 400 * self.dimension


@dataclass
class OptimizationOutcome:
    params: np.ndarray
    error: float
    iterations: int
    converged: bool
    start_index: int = 0

    def sequence(self) -> PulseSequence:
        return decode(self.params)


def decode(params) -> PulseSequence:
    n = len(params) // 2
    return PulseSequence.from_arrays(list(params[:n]), list(params[n:]))


def encode(seq: PulseSequence) -> np.ndarray:
    return np.array(seq.areas + seq.phis, dtype=float)


# -- objectives -----------------------------------------------------------


def _split(params, n):
    areas = [float(v) for v in params[:n]]
    phis = params[n:]
    a = [math.cos(p) for p in phis]
    b = [math.sin(p) for p in phis]
    return areas, a, b


def constraint_penalty(params, cfg: OptimizerConfig) -> float:
    """Raw sum of squared constraint violations (unweighted)."""
    n = cfg.n_pulses
    areas, a, b = _split(params, n)
    return sum(
        v * v
        for k in range(n)
        for v in pulse_violations(a[k], b[k], areas[k], cfg.constraints)
    )


def _best_fidelity(uV, uA, uB, cfg: OptimizerConfig) -> float:
    return max(branch_fidelity(uV, uA, uB, br) for br in cfg.target_class.branches)


def gate_error(params, cfg: OptimizerConfig) -> float:
    """1 - F for the target class, without any penalty."""
    uV, uA, uB = fast_diagonal(*_split(params, cfg.n_pulses))
    return 1.0 - _best_fidelity(uV, uA, uB, cfg)


def objective_error(params, cfg: OptimizerConfig) -> float:
    """Gate error plus the weighted constraint penalty."""
    n = cfg.n_pulses
    areas, a, b = _split(params, n)
    uV, uA, uB = fast_diagonal(areas, a, b)
    err = 1.0 - _best_fidelity(uV, uA, uB, cfg)
    return err + cfg.penalty_weight * constraint_penalty(params, cfg)


def mechanism_guided_error(params, cfg: OptimizerConfig) -> float:
    """Error of the gate in which uV keeps only the target pathway class.

    Since the four V buckets sum to uV, driving this error to zero forces
    the other classes toward zero as well.
    """
    if cfg.target_mechanism is None:
        raise ProtocolError("mechanism-guided objective needs a target mechanism")
    n = cfg.n_pulses
    areas, a, b = _split(params, n)
    _, uA, uB = fast_diagonal(areas, a, b)
    buckets = fast_v_buckets(areas, a, b)
    k = cfg.target_mechanism.bucket_index
    err = 1.0 - _best_fidelity(buckets[k], uA, uB, cfg)
    if cfg.mechanism_penalty:
        err += cfg.mechanism_penalty * sum(abs(u) for i, u in enumerate(buckets) if i != k)
    return err + cfg.penalty_weight * constraint_penalty(params, cfg)


def objective_for(cfg: OptimizerConfig) -> Callable[[np.ndarray], float]:
    if cfg.target_mechanism is None:
        return lambda x: objective_error(x, cfg)
    return lambda x: mechanism_guided_error(x, cfg)


# -- simplex --------------------------------------------------------------


def nelder_mead(
    f,
    x0,
    steps=None,
    tol: float = 1e-12,
    max_iterations: int = 1000,
    alpha: float = 1.0,
    gamma: float = 2.0,
    rho: float = 0.5,
    shrink: float = 0.5,
) -> OptimizationOutcome:
    """Minimize ``f`` with the Nelder-Mead simplex method.

    Parameters
    ----------
    f : callable
        Objective taking a 1-D array.
    x0 : array_like
        Starting vertex; the other vertices are ``x0 + steps[i] * e_i``.
    steps : array_like, optional
        Per-coordinate initial displacements (default 0.25 everywhere).
    tol : float
        Stop when ``max(f) - min(f)`` over the simplex drops below this and
        the simplex centroid is no better than the best vertex.
    max_iterations : int
        Hard cap on simplex iterations.

    Returns
    -------
    OptimizationOutcome
        Best vertex and its value.  ``converged`` is False when the cap was
        hit or the objective returned a non-finite value.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    steps = np.full(n, 0.25) if steps is None else np.asarray(steps, dtype=float)
    simplex = np.empty((n + 1, n))
    simplex[0] = x0
    for i in range(n):
        simplex[i + 1] = x0
        simplex[i + 1, i] += steps[i]
    fs = np.array([f(v) for v in simplex])
    if not np.all(np.isfinite(fs)):
        k = int(np.argmin(np.where(np.isfinite(fs), fs, np.inf)))
        return OptimizationOutcome(simplex[k].copy(), float(fs[k]), 0, False)

    it = 0
    converged = False
    while True:
        order = np.argsort(fs, kind="stable")
        simplex, fs = simplex[order], fs[order]
        if fs[-1] - fs[0] < tol:
            # a level simplex may straddle the minimum; probe its center once
            mid = simplex.mean(axis=0)
            fm = f(mid)
            if not (math.isfinite(fm) and fm < fs[0] - tol):
                converged = True
                break
            simplex[-1], fs[-1] = mid, fm
            if it >= max_iterations:
                break
            it += 1
            continue
        if it >= max_iterations:
            break
        it += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + alpha * (centroid - worst)
        fr = f(xr)
        if not math.isfinite(fr):
            break
        if fr < fs[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = f(xe)
            if not math.isfinite(fe):
                break
            if fe < fr:
                simplex[-1], fs[-1] = xe, fe
            else:
                simplex[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            simplex[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + rho * (xr - centroid)
            fc = f(xc)
            accept = fc <= fr
        else:
            xc = centroid + rho * (worst - centroid)
            fc = f(xc)
            accept = fc < fs[-1]
        if not math.isfinite(fc):
            break
        if accept:
            simplex[-1], fs[-1] = xc, fc
            continue
        simplex[1:] = simplex[0] + shrink * (simplex[1:] - simplex[0])
        fs[1:] = [f(v) for v in simplex[1:]]
        if not np.all(np.isfinite(fs)):
            break

    finite = np.where(np.isfinite(fs), fs, np.inf)
    k = int(np.argmin(finite))
    ok = converged and bool(np.all(np.isfinite(fs)))
    return OptimizationOutcome(simplex[k].copy(), float(fs[k]), it, ok)


# -- sampling and campaigns -----------------------------------------------


def feasible_arcs(c: ConstraintSpec) -> list[tuple[float, float]]:
    """Disjoint angle intervals whose structural vectors satisfy ``c``."""
    s = c.sigma
    if not 0.0 <= s < 1.0:
        raise ProtocolError(f"sigma must lie in [0, 1), got {s}")
    lo = math.asin(s)
    if c.mode is ConstraintMode.ABS_B:
        if s == 0.0:
            return [(-math.pi, math.pi)]
        return [(lo, math.pi - lo), (-math.pi + lo, -lo)]
    hi = math.acos(s)
    if lo > hi:
        raise ProtocolError(
            f"no structural vector satisfies {c.mode.value} with sigma={s} "
            f"(maximum is 1/sqrt(2) = {1 / math.sqrt(2):.4f})"
        )
    if c.mode is ConstraintMode.POSITIVE:
        return [(lo, hi)]
    return [(lo, hi), (math.pi - hi, math.pi - lo), (-hi, -lo), (-math.pi + lo, -math.pi + hi)]


def sample_angle(arcs, rng: np.random.Generator) -> float:
    lengths = np.array([b - a for a, b in arcs])
    u = rng.uniform(0.0, lengths.sum())
    for (a, _), length in zip(arcs, lengths):
        if u <= length:
            return a + u
        u -= length
    return arcs[-1][1]


def sample_start(cfg: OptimizerConfig, rng: np.random.Generator) -> np.ndarray:
    """Feasible starting vector: uniform areas, uniform angles on the arcs."""
    arcs = feasible_arcs(cfg.constraints)
    lo, hi = cfg.area_range
    areas = rng.uniform(lo, hi, cfg.n_pulses)
    phis = [sample_angle(arcs, rng) for _ in range(cfg.n_pulses)]
    return np.concatenate([areas, phis])


def start_rng(seed: int, start_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(start_index)])


def run_single(cfg: OptimizerConfig, start_index: int) -> OptimizationOutcome:
    x0 = sample_start(cfg, start_rng(cfg.seed, start_index))
    n = cfg.n_pulses
    steps = np.concatenate([np.full(n, AREA_STEP), np.full(n, ANGLE_STEP)])
    out = nelder_mead(
        objective_for(cfg),
        x0,
        steps=steps,
        tol=cfg.convergence_tol,
        max_iterations=cfg.iteration_limit,
    )
    out.start_index = start_index
    return out


def _run_chunk(args):
    cfg, indices = args
    return [run_single(cfg, i) for i in indices]


def default_threads() -> int:
    env = os.environ.get("QGATE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_multistart(
    cfg: OptimizerConfig, threads: Optional[int] = None, progress=None
) -> list[OptimizationOutcome]:
    """Run ``cfg.n_starts`` independent optimizations, in start order.

    Start ``i`` draws from its own generator seeded by ``(seed, i)``, so the
    result list does not depend on ``threads``.
    """
    threads = default_threads() if threads is None else max(1, threads)
    indices = list(range(cfg.n_starts))
    if threads == 1 or cfg.n_starts < 2:
        results = []
        for i in indices:
            results.append(run_single(cfg, i))
            if progress is not None:
                progress(i + 1)
        return results
    chunk = max(1, math.ceil(cfg.n_starts / (threads * 8)))
    jobs = [(cfg, indices[i : i + chunk]) for i in range(0, cfg.n_starts, chunk)]
    results = []
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for part in pool.map(_run_chunk, jobs):
            results.extend(part)
            if progress is not None:
                progress(len(results))
    return results
