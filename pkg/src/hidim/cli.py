"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 degenerate statistic or
internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, moments
from .errors import DegenerateVariance, HidimError, InputError
from .ranks_kernel import TiePolicy
from .statistics import ScalingMode, run_test

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv_matrix(path) -> np.ndarray:
    """Comma-separated numeric matrix; a non-numeric first row is a header."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    width = len(rows[0])
    try:
        values = np.array([[float(c) for c in row] for row in rows])
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from None
    if any(len(row) != width for row in rows):
        raise InputError(f"{path}: rows have different lengths")
    return values


_SCALING = {"exact": ScalingMode.EXACT, "asymptotic": ScalingMode.ASYMPTOTIC, "paper": ScalingMode.PAPER}


def _format_report(report) -> str:
    lines = [
        f"n = {report.n}, d = {report.d}, m = {report.m}, scaling = {report.scaling}, alpha = {report.alpha}",
        f"{'k':>3} {'T_n(k)':>16} {'nu_n(k)':>16} {'scale':>14} {'z':>10}",
    ]
    for k, t, nu, s, z in zip(report.orders, report.t, report.nu, report.scale, report.z):
        lines.append(f"{k:>3} {t:>16.8g} {nu:>16.8g} {s:>14.6g} {z:>10.4f}")
    verdict = "reject" if report.reject else "do not reject"
    lines.append(f"combined statistic = {report.t_bar:.6f}, p-value = {report.p_value:.6g}")
    lines.append(f"decision: {verdict} H_{report.m} ({report.m}-wise independence) at level {report.alpha}")
    return "\n".join(lines)


def cmd_test(args) -> int:
    data = read_csv_matrix(args.input)
    report = run_test(data, m=args.m, mode=_SCALING[args.scaling], alpha=args.alpha,
                      tie_policy=TiePolicy(args.ties))
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(_format_report(report))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.config:
        try:
            obj = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
        config = harness.ExperimentConfig.from_dict(obj)
        if args.seed is not None:
            config.master_seed = args.seed
        if args.reps is not None:
            config.replications = args.reps
    else:
        config = harness.preset(args.preset, replications=args.reps or 500, seed=args.seed or 0)
    table = harness.run_experiment(config)
    text = harness.emit_table(table, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_null_quantile(args) -> int:
    try:
        levels = [float(v) for v in args.levels.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse levels {args.levels!r}") from None
    cal = harness.simulate_null(args.n, args.d, args.m, _SCALING[args.scaling], args.reps, levels, args.seed)
    if args.format == "json":
        print(json.dumps(cal.to_dict(), indent=2))
    else:
        for level, q in zip(cal.levels, cal.quantiles):
            print(f"{level:g}\t{q:.6f}")
    return EXIT_OK


def cmd_moments(args) -> int:
    if args.list:
        print("\n".join(moments.MOMENT_IDS))
        return EXIT_OK
    if not args.id or args.n is None:
        raise InputError("--id and --n are required (or use --list)")
    value = moments.moment_closed_form(args.id, args.n, args.k)
    print(f"{value} ({float(value):.6g})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hidim", description="Rank-based tests for k-wise independence in high dimension.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="test a CSV data set for m-wise independence")
    p.add_argument("--input", required=True, help="CSV file, rows are observations")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--scaling", choices=sorted(_SCALING), default="exact")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--ties", choices=[t.value for t in TiePolicy], default=TiePolicy.ERROR.value)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="Monte Carlo rejection rates")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON experiment config")
    src.add_argument("--preset", choices=["table1", "table2", "table3"])
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--format", choices=["csv", "json", "text"], default="csv")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("null-quantile", help="simulated null quantiles of the combined statistic")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--scaling", choices=sorted(_SCALING), default="exact")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--levels", default="0.9,0.95,0.99")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_null_quantile)

    p = sub.add_parser("moments", help="exact closed-form moments")
    p.add_argument("--id")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--list", action="store_true", help="list known moment ids")
    p.set_defaults(func=cmd_moments)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateVariance as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HidimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
