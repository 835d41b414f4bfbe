"""Solution records and statistics over optimization campaigns.

Records are persisted as JSON lines.  Every derived field (gate diagonal,
pathway buckets, m-square coordinates, ranks, areas, orientations) is
recomputed from the protocol on load and must agree with what was stored.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ConstraintSpec, PulseSequence, SUBSYSTEMS, SubsystemId
from .optimizer import (
    OptimizationOutcome,
    OptimizerConfig,
    constraint_penalty,
    decode,
    gate_error,
    objective_for,
)
from .pathways import mcube_point
from .propagator import fidelity, gate_diagonal

DEFAULT_EPS = 1e-3
AREA_BIN = 0.05 * math.pi
COS_BIN = 0.05
VERIFY_TOL = 1e-10


class IntegrityError(ValueError):
    """A stored record disagrees with the values recomputed from its protocol."""


class RecordFormatError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


# -- records --------------------------------------------------------------


def describe(seq: PulseSequence) -> dict:
    """All derived quantities of a protocol, as plain JSON-ready values.

    Orientations use sign-normalized structural vectors (a pulse with a
    negative area is reported as ``(|A|, -e)``).
    """
    diag = gate_diagonal(seq)
    fid = fidelity(diag)
    point = mcube_point(seq)
    mech = {}
    for s in SUBSYSTEMS:
        m = point[s]
        mech[s.value] = {
            "u0": m.buckets.u0,
            "u1": m.buckets.u1,
            "ud": m.buckets.ud,
            "u2": m.buckets.u2,
            "x": m.x,
            "y": m.y,
            "omega": m.omega,
        }
    vecs = [
        (p.e.a, p.e.b) if p.area >= 0 else (-p.e.a, -p.e.b) for p in seq
    ]
    cosb = [[a1 * a2 + b1 * b2 for (a2, b2) in vecs] for (a1, b1) in vecs]
    return {
        "diagonal": {"uV": diag.uV, "uA": diag.uA, "uB": diag.uB},
        "cz_fidelity": fid.fidelity,
        "cz_branch": fid.branch,
        "mechanism": mech,
        "cube": list(point.cube),
        "omega_T": point.omega_T,
        "area_total": seq.total_area,
        "cos_beta": cosb,
    }


def _config_meta(cfg: OptimizerConfig) -> dict:
    c = cfg.constraints
    return {
        "n_pulses": cfg.n_pulses,
        "sigma": c.sigma,
        "mode": c.mode.value,
        "area_max": c.area_max,
        "penalty_weight": cfg.penalty_weight,
        "target_class": cfg.target_class.value,
        "target_mechanism": None if cfg.target_mechanism is None else cfg.target_mechanism.value,
        "mechanism_penalty": cfg.mechanism_penalty,
    }


def config_from_meta(meta: dict) -> OptimizerConfig:
    return OptimizerConfig(
        n_pulses=int(meta["n_pulses"]),
        constraints=ConstraintSpec(float(meta["sigma"]), meta["mode"], float(meta["area_max"])),
        penalty_weight=float(meta["penalty_weight"]),
        target_class=meta["target_class"],
        target_mechanism=meta["target_mechanism"],
        mechanism_penalty=float(meta["mechanism_penalty"]),
    )


@dataclass
class SolutionRecord:
    """One optimized protocol with its error and mechanism annotation.

    ``data`` holds the JSON object exactly as persisted.
    """

    data: dict

    @classmethod
    def from_outcome(cls, out: OptimizationOutcome, cfg: OptimizerConfig) -> SolutionRecord:
        seq = decode(out.params)
        n = cfg.n_pulses
        data = {
            "protocol": {
                "areas": [float(v) for v in out.params[:n]],
                "phis": [float(v) for v in out.params[n:]],
            },
            "error": float(out.error),
            "gate_error": gate_error(out.params, cfg),
            "penalty": constraint_penalty(out.params, cfg),
        }
        data.update(describe(seq))
        data["meta"] = dict(
            _config_meta(cfg),
            seed=cfg.seed,
            start_index=out.start_index,
            iterations=out.iterations,
            converged=out.converged,
        )
        return cls(data)

    @property
    def sequence(self) -> PulseSequence:
        p = self.data["protocol"]
        return PulseSequence.from_arrays(p["areas"], p["phis"])

    @property
    def params(self) -> np.ndarray:
        p = self.data["protocol"]
        return np.array(p["areas"] + p["phis"], dtype=float)

    @property
    def error(self) -> float:
        return self.data["error"]

    @property
    def n_pulses(self) -> int:
        return len(self.data["protocol"]["areas"])

    @property
    def area_total(self) -> float:
        return self.data["area_total"]

    @property
    def abs_areas(self) -> list[float]:
        return [abs(v) for v in self.data["protocol"]["areas"]]

    @property
    def cube(self) -> tuple[int, int, int]:
        return tuple(self.data["cube"])

    @property
    def omega_T(self) -> int:
        return self.data["omega_T"]

    def omega(self, s) -> int:
        return self.data["mechanism"][SubsystemId(s).value]["omega"]

    def xy(self, s) -> tuple[float, float]:
        m = self.data["mechanism"][SubsystemId(s).value]
        return (m["x"], m["y"])

    def cos_beta(self, i: int, j: int) -> float:
        """Orientation cosine between pulses i and j (1-based)."""
        return self.data["cos_beta"][i - 1][j - 1]

    @property
    def feasible(self) -> bool:
        return self.data["penalty"] == 0.0

    def verify(self) -> None:
        """Recompute every derived field and compare with the stored values."""
        fresh = describe(self.sequence)
        cfg = config_from_meta(self.data["meta"])
        fresh["error"] = objective_for(cfg)(self.params)
        fresh["gate_error"] = gate_error(self.params, cfg)
        fresh["penalty"] = constraint_penalty(self.params, cfg)
        for key, value in fresh.items():
            _compare(key, self.data.get(key), value)


def _compare(path: str, stored, fresh) -> None:
    if isinstance(fresh, dict):
        if not isinstance(stored, dict):
            raise IntegrityError(f"{path}: expected an object")
        for k, v in fresh.items():
            _compare(f"{path}.{k}", stored.get(k), v)
    elif isinstance(fresh, list):
        if not isinstance(stored, list) or len(stored) != len(fresh):
            raise IntegrityError(f"{path}: length mismatch")
        for i, (a, b) in enumerate(zip(stored, fresh)):
            _compare(f"{path}[{i}]", a, b)
    elif isinstance(fresh, (str, bool)) or fresh is None:
        if stored != fresh:
            raise IntegrityError(f"{path}: stored {stored!r}, recomputed {fresh!r}")
    elif isinstance(fresh, int):
        if stored != fresh:
            raise IntegrityError(f"{path}: stored {stored!r}, recomputed {fresh!r}")
    else:
        if not isinstance(stored, (int, float)) or abs(stored - fresh) > VERIFY_TOL:
            raise IntegrityError(f"{path}: stored {stored!r}, recomputed {fresh!r}")


def annotate(outcomes, cfg: OptimizerConfig) -> list[SolutionRecord]:
    return [SolutionRecord.from_outcome(o, cfg) for o in outcomes]


# -- persistence ----------------------------------------------------------


def format_float(x: float) -> str:
    return format(x, ".17g")


def _encode(obj) -> str:
    """Compact JSON with floats written to 17 significant digits."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("non-finite value in record")
        text = format_float(obj)
        return text if any(ch in text for ch in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(k)}:{_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps_record(rec: SolutionRecord) -> str:
    return _encode(rec.data)


def persist(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_record(rec) + "\n")


def load(path, verify: bool = True) -> list[SolutionRecord]:
    """Read JSON-lines records; line numbers in errors are 1-based."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordFormatError(lineno, f"malformed JSON ({exc.msg})") from exc
            if not isinstance(data, dict) or "protocol" not in data or "meta" not in data:
                raise RecordFormatError(lineno, "not a solution record")
            rec = SolutionRecord(data)
            if verify:
                try:
                    rec.verify()
                except IntegrityError as exc:
                    raise IntegrityError(f"line {lineno}: {exc}") from None
                except (KeyError, TypeError, ValueError) as exc:
                    raise RecordFormatError(lineno, f"incomplete record ({exc})") from exc
            records.append(rec)
    return records


# -- statistics -----------------------------------------------------------


class Quantity(str, enum.Enum):
    SUCCESS_RATE = "success-rate"
    AREA_TOTAL = "area-total"
    AREA_CUMULATIVE = "area-cumulative"
    AREA_JOINT = "area-joint"
    COS_BETA = "cos-beta"
    MSQUARE = "msquare"
    MCUBE = "mcube"


@dataclass(frozen=True)
class HistogramSpec:
    quantity: Quantity
    bin_width: Optional[float] = None
    eps: float = DEFAULT_EPS
    pair: Optional[tuple[int, int]] = None
    subsystem: Optional[SubsystemId] = None
    grid_n: int = 3


@dataclass
class Table:
    """Plot-ready table: column names plus rows of numbers."""

    quantity: str
    columns: list[str]
    rows: list[list]
    note: str = ""

    @property
    def empty(self) -> bool:
        return not self.rows

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["quantity"] + self.columns)
            for row in self.rows:
                w.writerow(
                    [self.quantity]
                    + [format_float(v) if isinstance(v, float) else v for v in row]
                )


def filter_records(records, eps: float = DEFAULT_EPS) -> list[SolutionRecord]:
    return [r for r in records if r.error <= eps]


def success_rate_curve(records, thresholds) -> Table:
    """Fraction of all starts whose final error is at most each threshold."""
    errors = np.sort([r.error for r in records])
    if errors.size == 0:
        raise ValueError("success rate needs at least one record")
    rows = [
        [float(eps), float(np.searchsorted(errors, eps, side="right") / errors.size)]
        for eps in sorted(thresholds)
    ]
    return Table(Quantity.SUCCESS_RATE.value, ["eps", "rate"], rows)


def _centered_bins(values, width):
    idx = np.rint(np.asarray(values, dtype=float) / width).astype(int)
    return idx


def area_total_histogram(records, bin_width: float = AREA_BIN, eps: float = DEFAULT_EPS) -> Table:
    """Probability mass of total area A_T over the solutions with error <= eps.

    Bins are centered on integer multiples of ``bin_width`` from 0 up to the
    largest occupied bin; empty bins are kept so local maxima are visible.
    """
    sel = filter_records(records, eps)
    cols = ["A_T", "A_T_over_pi", "rho"]
    if not sel:
        return Table(Quantity.AREA_TOTAL.value, cols, [], note="no records below eps")
    idx = _centered_bins([r.area_total for r in sel], bin_width)
    counts = np.bincount(idx, minlength=idx.max() + 1)
    mass = counts / len(sel)
    rows = [[k * bin_width, k * bin_width / math.pi, float(m)] for k, m in enumerate(mass)]
    return Table(Quantity.AREA_TOTAL.value, cols, rows)


def cumulative_area(rho: Table) -> Table:
    """Running sum of a probability table; R(A) = mass of bins centered <= A."""
    centers = rho.column("A_T")
    cum = np.cumsum(rho.column("rho"))
    rows = [[float(c), float(c / math.pi), float(v)] for c, v in zip(centers, cum)]
    return Table(Quantity.AREA_CUMULATIVE.value, ["A_T", "A_T_over_pi", "R"], rows)


def cumulative_at(table: Table, area: float) -> float:
    centers = table.column("A_T")
    values = table.column("R")
    k = np.searchsorted(centers, area + 1e-12, side="right")
    return 0.0 if k == 0 else float(values[k - 1])


def _check_pair(records, pair):
    i, j = pair
    n = min(r.n_pulses for r in records) if records else j
    if not 1 <= i < j <= n:
        raise ValueError(f"invalid pulse pair ({i}, {j}) for {n}-pulse records")


def cos_beta_histogram(
    records, pair: tuple[int, int], bin_width: float = COS_BIN, eps: float = DEFAULT_EPS
) -> Table:
    """Distribution of <e_i|e_j> over [-1, 1] with edge-aligned bins."""
    _check_pair(records, pair)
    sel = filter_records(records, eps)
    cols = ["lo", "hi", "center", "rho"]
    if not sel:
        return Table(Quantity.COS_BETA.value, cols, [], note="no records below eps")
    nbins = int(round(2.0 / bin_width))
    vals = np.clip([r.cos_beta(*pair) for r in sel], -1.0, 1.0)
    idx = np.minimum(((vals + 1.0) / bin_width).astype(int), nbins - 1)
    mass = np.bincount(idx, minlength=nbins) / len(sel)
    rows = []
    for k, m in enumerate(mass):
        lo = -1.0 + k * bin_width
        rows.append([lo, lo + bin_width, lo + 0.5 * bin_width, float(m)])
    return Table(Quantity.COS_BETA.value, cols, rows)


def joint_area_histogram(
    records, i: int, j: int, bin_width: float = AREA_BIN, eps: float = DEFAULT_EPS
) -> Table:
    """Counts over (|A_i|, |A_j|), normalized so the fullest bin is 1."""
    _check_pair(records, tuple(sorted((i, j))))
    sel = filter_records(records, eps)
    cols = ["A_i", "A_j", "value"]
    if not sel:
        return Table(Quantity.AREA_JOINT.value, cols, [], note="no records below eps")
    bi = _centered_bins([r.abs_areas[i - 1] for r in sel], bin_width)
    bj = _centered_bins([r.abs_areas[j - 1] for r in sel], bin_width)
    grid = np.zeros((bi.max() - bi.min() + 1, bj.max() - bj.min() + 1))
    np.add.at(grid, (bi - bi.min(), bj - bj.min()), 1.0)
    grid /= grid.max()
    rows = [
        [(bi.min() + p) * bin_width, (bj.min() + q) * bin_width, float(grid[p, q])]
        for p in range(grid.shape[0])
        for q in range(grid.shape[1])
    ]
    return Table(Quantity.AREA_JOINT.value, cols, rows, note="peak-normalized")


def msquare_density(records, s: SubsystemId, grid_n: int = 3, eps: float = DEFAULT_EPS) -> Table:
    """Peak-normalized density of (x, y) on a grid_n x grid_n partition of [-1,1]^2."""
    if grid_n < 3:
        raise ValueError("m-square grid needs at least 3 divisions")
    s = SubsystemId(s)
    sel = filter_records(records, eps)
    cols = ["x_center", "y_center", "density"]
    if not sel:
        return Table(Quantity.MSQUARE.value, cols, [], note="no records below eps")
    width = 2.0 / grid_n
    grid = np.zeros((grid_n, grid_n))
    for r in sel:
        x, y = r.xy(s)
        ix = min(grid_n - 1, int((x + 1.0) / width))
        iy = min(grid_n - 1, int((y + 1.0) / width))
        grid[ix, iy] += 1
    grid /= grid.max()
    rows = [
        [-1.0 + (p + 0.5) * width, -1.0 + (q + 0.5) * width, float(grid[p, q])]
        for p in range(grid_n)
        for q in range(grid_n)
    ]
    return Table(Quantity.MSQUARE.value, cols, rows, note="peak-normalized")


@dataclass(frozen=True)
class CubeSummary:
    frequencies: dict
    modal: tuple[int, int, int]
    modal_omega_T: int


def mcube_frequencies(records, eps: Optional[float] = None) -> CubeSummary:
    """Relative frequency of each (omega_A, omega_B, omega_V) triple."""
    sel = list(records) if eps is None else filter_records(records, eps)
    if not sel:
        raise ValueError("m-cube frequencies need at least one record")
    counts = Counter(r.cube for r in sel)
    freqs = {k: v / len(sel) for k, v in sorted(counts.items())}
    modal = max(sorted(counts), key=lambda k: counts[k])
    return CubeSummary(freqs, modal, sum(modal))


def mcube_table(summary: CubeSummary) -> Table:
    rows = [
        [wa, wb, wv, wa + wb + wv, float(f)]
        for (wa, wb, wv), f in summary.frequencies.items()
    ]
    return Table(
        Quantity.MCUBE.value,
        ["omega_A", "omega_B", "omega_V", "omega_T", "frequency"],
        rows,
        note=f"modal {summary.modal} omega_T={summary.modal_omega_T}",
    )


def local_maxima(table: Table, value: str = "rho", center: str = "A_T") -> list[float]:
    """Centers of bins strictly higher than both neighbours (plateaus count once)."""
    v = table.column(value)
    c = table.column(center)
    out = []
    k = 0
    while k < len(v):
        j = k
        while j + 1 < len(v) and v[j + 1] == v[k]:
            j += 1
        left = v[k - 1] if k > 0 else -np.inf
        right = v[j + 1] if j + 1 < len(v) else -np.inf
        if v[k] > 0 and v[k] > left and v[k] > right:
            out.append(float(c[(k + j) // 2]))
        k = j + 1
    return out
