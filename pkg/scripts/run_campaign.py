#!/usr/bin/env python3
"""Run one optimization campaign and write its JSONL records.

Same knobs as ``qgate optimize`` plus a progress bar on stderr; handy for
long runs launched from a notebook or a batch queue.

    python3 scripts/run_campaign.py --pulses 3 --sigma 0.1 --starts 5000 --out runs/p3.jsonl
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

from qgate.campaign import annotate, persist
from qgate.core import ConstraintSpec
from qgate.optimizer import OptimizerConfig, run_multistart


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--pulses", type=int, default=3)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--mode", default="abs-b", choices=["abs-b", "positive", "abs-both"])
    p.add_argument("--starts", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--area-max", type=float, default=12.0, help="units of pi")
    p.add_argument("--target-mechanism", default=None, choices=["0loop", "1loop", "dloop", "2loop"])
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", type=Path, required=True)
    return p.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    area_max = args.area_max * math.pi
    cfg = OptimizerConfig(
        n_pulses=args.pulses,
        constraints=ConstraintSpec(args.sigma, args.mode, area_max),
        n_starts=args.starts,
        seed=args.seed,
        area_range=(0.1 * math.pi, area_max),
        target_mechanism=args.target_mechanism,
    )
    t0 = time.perf_counter()

    def progress(done):
        if done % 50 == 0 or done == cfg.n_starts:
            rate = done / (time.perf_counter() - t0)
            print(f"\r{done}/{cfg.n_starts} starts ({rate:.1f}/s)", end="", file=sys.stderr)

    records = annotate(run_multistart(cfg, threads=args.threads, progress=progress), cfg)
    print(file=sys.stderr)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    persist(records, args.out)
    errors = sorted(r.error for r in records)
    print(f"best error {errors[0]:.3e}; {sum(e <= 1e-3 for e in errors)} of {len(errors)} at or below 1e-3")
    return 0


if __name__ == "__main__":
    sys.exit(main())
