"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 numerical invariant
violation or numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, load_config
from .report import read_csv, render
from .sweep import NumericalInvariantError, SweepError, fit_report_slopes, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

log = logging.getLogger("purfid")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="purfid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scale sweep and write a report")
    run.add_argument("config")
    run.add_argument("--out", help="report path ('-' for stdout); overrides output.path")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--threads", type=_positive, default=1)
    run.add_argument("--seed-override", type=_u64)

    validate = sub.add_parser("validate", help="parse and validate a config")
    validate.add_argument("config")

    slopes = sub.add_parser("slopes", help="re-fit slopes from an existing CSV report")
    slopes.add_argument("report")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed_override is not None:
        cfg.averaging = replace(cfg.averaging, seed=args.seed_override)
    out = args.out or cfg.output_path
    fmt = args.format or cfg.output_format
    if fmt is None:
        fmt = "json" if out and out.endswith(".json") else "csv"
    report = run_sweep(cfg, threads=args.threads)
    text = render(report, fmt)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
        log.info("wrote %d rows to %s", len(report.rows), out)
    return EXIT_OK


def _cmd_slopes(args) -> int:
    rows = read_csv(Path(args.report).read_text())
    for name, fit in fit_report_slopes(rows).items():
        if fit is None:
            print(f"{name:>14}: insufficient points above noise floor")
        else:
            print(f"{name:>14}: slope {fit.slope:.6f}  intercept {fit.intercept:.6f}  "
                  f"r2 {fit.r2:.6f}  ({len(fit.used)} of {len(rows)} points)")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            print(f"ok: {cfg.channel.kind} channel, {cfg.noise.kind} noise, "
                  f"{cfg.averaging.method}, {len(cfg.sweep)} scale(s)")
            return EXIT_OK
        if args.command == "slopes":
            return _cmd_slopes(args)
        return _cmd_run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # malformed report files for `slopes`
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalInvariantError, SweepError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
