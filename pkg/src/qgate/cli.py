"""Command-line front end: ``qgate optimize | analyze | validate | show``.

Exit codes: 0 success, 1 usage error, 2 validation failure or empty
selection, 3 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import math
import sys

from .campaign import (
    AREA_BIN,
    COS_BIN,
    DEFAULT_EPS,
    IntegrityError,
    RecordFormatError,
    annotate,
    area_total_histogram,
    cos_beta_histogram,
    cumulative_area,
    describe,
    joint_area_histogram,
    load,
    mcube_frequencies,
    mcube_table,
    msquare_density,
    persist,
    success_rate_curve,
)
from .core import MAX_PULSES, SUBSYSTEMS, ConstraintSpec, ProtocolError, read_protocol
from .optimizer import OptimizerConfig, run_multistart
from .propagator import mixing_angle
from .validation import SUITES, run_suite

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_IO = 0, 1, 2, 3
REPORT_THRESHOLDS = (1e-2, 1e-3, 1e-5, 1e-7)
CURVE_THRESHOLDS = tuple(10.0 ** -k for k in range(1, 13))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _kv(key, value) -> None:
    if isinstance(value, float):
        value = format(value, ".17g")
    print(f"{key}: {value}")


# -- optimize -------------------------------------------------------------


def cmd_optimize(args) -> int:
    if not 1 <= args.pulses <= MAX_PULSES:
        raise UsageError(f"--pulses must be between 1 and {MAX_PULSES}")
    area_max = args.area_max * math.pi
    try:
        constraints = ConstraintSpec(args.sigma, args.mode, area_max)
        lo = -area_max if args.signed_areas else args.area_min * math.pi
        cfg = OptimizerConfig(
            n_pulses=args.pulses,
            constraints=constraints,
            n_starts=args.starts,
            seed=args.seed,
            area_range=(lo, area_max),
            max_iterations=args.max_iter,
            convergence_tol=args.tol,
            penalty_weight=args.penalty,
            target_mechanism=args.target_mechanism,
            mechanism_penalty=args.mech_penalty,
            target_class=args.target_class,
        )
    except ProtocolError as exc:
        raise UsageError(str(exc)) from exc
    outcomes = run_multistart(cfg, threads=args.threads)
    records = annotate(outcomes, cfg)
    try:
        persist(records, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    errors = [r.error for r in records]
    _kv("starts", len(records))
    _kv("best_error", min(errors))
    _kv("converged", sum(r.data["meta"]["converged"] for r in records))
    _kv("infeasible", sum(not r.feasible for r in records))
    for eps in REPORT_THRESHOLDS:
        n = sum(e <= eps for e in errors)
        _kv(f"success_{eps:.0e}", f"{n} ({n / len(errors):.4f})")
    _kv("out", args.out)
    return EXIT_OK


# -- analyze --------------------------------------------------------------


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        i, j = (int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"expected a pulse pair like 1,2, got {text!r}") from None
    return i, j


def build_report(records, report: str, eps: float, bin_width):
    """Return the campaign table named by a ``--report`` value."""
    name, _, arg = report.partition(":")
    if name == "success-rate":
        return success_rate_curve(records, CURVE_THRESHOLDS)
    if name in ("area-total", "area-cumulative"):
        width = AREA_BIN if bin_width is None else bin_width * math.pi
        table = area_total_histogram(records, width, eps)
        return table if name == "area-total" or table.empty else cumulative_area(table)
    if name == "area-joint":
        i, j = _parse_pair(arg)
        width = AREA_BIN if bin_width is None else bin_width * math.pi
        return joint_area_histogram(records, i, j, width, eps)
    if name == "cos-beta":
        pair = _parse_pair(arg)
        return cos_beta_histogram(records, pair, COS_BIN if bin_width is None else bin_width, eps)
    if name == "msquare":
        if arg not in ("V", "A", "B"):
            raise UsageError("msquare report needs a subsystem: msquare:V, msquare:A or msquare:B")
        return msquare_density(records, arg, 3, eps)
    if name == "mcube":
        return mcube_table(mcube_frequencies(records, eps))
    raise UsageError(f"unknown report {report!r}")


def cmd_analyze(args) -> int:
    try:
        records = load(args.inp)
    except OSError as exc:
        print(f"error: cannot read {args.inp}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RecordFormatError, IntegrityError) as exc:
        print(f"error: {args.inp}: {exc}", file=sys.stderr)
        return EXIT_IO
    if not records:
        print("note: no records in input", file=sys.stderr)
        return EXIT_FAIL
    try:
        table = build_report(records, args.report, args.eps, args.bin)
    except ValueError as exc:
        if "no records" in str(exc) or "at least one" in str(exc):
            print(f"note: {exc}", file=sys.stderr)
            return EXIT_FAIL
        raise UsageError(str(exc)) from exc
    if table.empty:
        print(f"note: no records with error <= {args.eps:g}", file=sys.stderr)
        return EXIT_FAIL
    try:
        table.write_csv(args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    _kv("report", args.report)
    _kv("records", len(records))
    _kv("rows", len(table.rows))
    if table.note:
        _kv("note", table.note)
    _kv("out", args.out)
    return EXIT_OK


# -- validate -------------------------------------------------------------


def cmd_validate(args) -> int:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    checks = run_suite(args.suite, args.trials, args.seed)
    width = max(len(c.name) for c in checks)
    print(f"{'check':<{width}}  {'max_deviation':>22}  {'tolerance':>9}  result")
    for c in checks:
        verdict = "PASS" if c.passed else "FAIL"
        print(f"{c.name:<{width}}  {c.deviation:>22.15e}  {c.tol:>9.0e}  {verdict}")
    ok = all(c.passed for c in checks)
    _kv("suite", args.suite)
    _kv("status", "pass" if ok else "fail")
    return EXIT_OK if ok else EXIT_FAIL


# -- show -----------------------------------------------------------------


def cmd_show(args) -> int:
    try:
        seq = read_protocol(args.protocol)
    except OSError as exc:
        print(f"error: cannot read {args.protocol}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ProtocolError, ValueError) as exc:
        print(f"error: {args.protocol}: {exc}", file=sys.stderr)
        return EXIT_IO
    info = describe(seq)
    _kv("pulses", len(seq))
    _kv("areas_over_pi", " ".join(format(A / math.pi, ".12g") for A in seq.areas))
    _kv("factors", " ".join(f"({p.e.a:.12g},{p.e.b:.12g})" for p in seq))
    _kv("area_total_over_pi", seq.total_area / math.pi)
    for s in SUBSYSTEMS:
        gpa = " ".join(format(2 * mixing_angle(p, s) / math.pi, ".12g") for p in seq)
        _kv(f"gpa_over_pi_{s.value}", gpa)
    d = info["diagonal"]
    _kv("diagonal", f"{d['uV']:.12g} {d['uA']:.12g} {d['uB']:.12g} 1")
    _kv("fidelity", info["cz_fidelity"])
    _kv("error", 1.0 - info["cz_fidelity"])
    _kv("branch", info["cz_branch"])
    for s, m in info["mechanism"].items():
        _kv(
            f"buckets_{s}",
            " ".join(format(m[k], ".12g") for k in ("u0", "u1", "ud", "u2")),
        )
        _kv(f"xy_{s}", f"{m['x']:.12g} {m['y']:.12g}")
        _kv(f"omega_{s}", m["omega"])
    _kv("cube", " ".join(str(w) for w in info["cube"]))
    _kv("omega_T", info["omega_T"])
    n = len(seq)
    for i in range(n):
        for j in range(i + 1, n):
            _kv(f"cos_beta_{i + 1}{j + 1}", format(info["cos_beta"][i][j], ".12g"))
    return EXIT_OK


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qgate", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    o = sub.add_parser("optimize", help="multi-start constrained optimization campaign")
    o.add_argument("--pulses", type=int, required=True)
    o.add_argument("--sigma", type=float, default=0.1)
    o.add_argument("--mode", choices=["abs-b", "positive", "abs-both"], default="abs-b")
    o.add_argument("--starts", type=int, default=100)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--area-max", type=float, default=12.0, help="largest |area|, in units of pi")
    o.add_argument("--area-min", type=float, default=0.1, help="smallest sampled area, units of pi")
    o.add_argument("--signed-areas", action="store_true", help="sample areas in [-max, max]")
    o.add_argument(
        "--target-mechanism", choices=["0loop", "1loop", "dloop", "2loop"], default=None
    )
    o.add_argument("--mech-penalty", type=float, default=0.0)
    o.add_argument("--target-class", choices=["jaksch", "cz"], default="jaksch")
    o.add_argument("--penalty", type=float, default=10.0, help="constraint penalty weight")
    o.add_argument("--max-iter", type=int, default=None)
    o.add_argument("--tol", type=float, default=1e-12)
    o.add_argument("--threads", type=int, default=None, help="default: QGATE_THREADS or all cores")
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_optimize)

    a = sub.add_parser("analyze", help="tables from a campaign JSONL file")
    a.add_argument("--in", dest="inp", required=True)
    a.add_argument(
        "--report",
        required=True,
        help="success-rate | area-total | area-cumulative | area-joint:i,j | "
        "cos-beta:i,j | msquare:V|A|B | mcube",
    )
    a.add_argument("--eps", type=float, default=DEFAULT_EPS)
    a.add_argument("--bin", type=float, default=None, help="bin width (areas in units of pi)")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("validate", help="run a self-check suite")
    v.add_argument("--suite", required=True)
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("show", help="report on one protocol file")
    s.add_argument("--protocol", required=True)
    s.set_defaults(func=cmd_show)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qgate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
