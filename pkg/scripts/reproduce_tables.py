#!/usr/bin/env python3
"""Regenerate the campaign tables behind the success-rate, area, orientation
and mechanism plots at desk scale.

Writes one CSV per table into ``--outdir`` and reuses existing JSONL runs
there, so an interrupted invocation resumes where it stopped.

    python3 scripts/reproduce_tables.py --starts 2000 --outdir runs/
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from qgate.campaign import (
    annotate,
    area_total_histogram,
    cos_beta_histogram,
    cumulative_area,
    joint_area_histogram,
    load,
    mcube_frequencies,
    mcube_table,
    msquare_density,
    persist,
    success_rate_curve,
)
from qgate.core import ConstraintSpec
from qgate.optimizer import OptimizerConfig, run_multistart

THRESHOLDS = [10.0 ** -k for k in range(1, 13)]


@dataclass(frozen=True)
class Run:
    name: str
    n_pulses: int
    sigma: float = 0.1
    mode: str = "abs-b"
    area_max_pi: float = 12.0
    mechanism: str | None = None

    def config(self, starts: int, seed: int) -> OptimizerConfig:
        area_max = self.area_max_pi * math.pi
        return OptimizerConfig(
            n_pulses=self.n_pulses,
            constraints=ConstraintSpec(self.sigma, self.mode, area_max),
            n_starts=starts,
            seed=seed,
            area_range=(0.1 * math.pi, area_max),
            target_mechanism=self.mechanism,
        )


RUNS = [
    Run("p2", 2),
    Run("p3", 3),
    Run("p4", 4),
    Run("p5", 5),
    Run("p3_sigma06", 3, sigma=0.6),
    Run("p3_area4", 3, area_max_pi=4.0),
    Run("p3_positive_area4", 3, mode="positive", area_max_pi=4.0),
    Run("p2_1loop", 2, mechanism="1loop"),
]


def records_for(run: Run, starts: int, seed: int, outdir: Path):
    path = outdir / f"{run.name}.jsonl"
    if path.exists():
        return load(path)
    print(f"running {run.name} ({starts} starts)", file=sys.stderr)
    cfg = run.config(starts, seed)
    records = annotate(run_multistart(cfg), cfg)
    persist(records, path)
    return records


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--starts", type=int, default=2000)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--outdir", type=Path, default=Path("runs"))
    p.add_argument("--only", nargs="*", help="subset of run names")
    args = p.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)

    runs = [r for r in RUNS if not args.only or r.name in args.only]
    for run in runs:
        recs = records_for(run, args.starts, args.seed, args.outdir)
        tables = {"success-rate": success_rate_curve(recs, THRESHOLDS)}
        if run.mechanism is None:
            rho = area_total_histogram(recs)
            if not rho.empty:
                tables["area-total"] = rho
                tables["area-cumulative"] = cumulative_area(rho)
                tables["area-joint-1-2"] = joint_area_histogram(recs, 1, 2)
                if run.n_pulses >= 3:
                    tables["cos-beta-1-2"] = cos_beta_histogram(recs, (1, 2))
                    tables["cos-beta-1-3"] = cos_beta_histogram(recs, (1, 3))
                for s in "VAB":
                    tables[f"msquare-{s}"] = msquare_density(recs, s)
                tables["mcube"] = mcube_table(mcube_frequencies(recs, 1e-3))
        for name, table in tables.items():
            table.write_csv(args.outdir / f"{run.name}__{name}.csv")
        best = min(r.error for r in recs)
        ok = sum(r.error <= 1e-3 for r in recs)
        print(f"{run.name}: best {best:.2e}, success@1e-3 {ok / len(recs):.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
