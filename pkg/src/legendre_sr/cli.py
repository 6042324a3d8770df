"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for config
or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from .config import ExperimentConfig, load_config
from .errors import ConfigError
from .tasks import gpr_track_rows, ou_flow_rows, readout_task, sr_rows
from .verification import run_suite

log = logging.getLogger("legendre_sr")

SUBCOMMANDS = ("verify", "gpr-track", "ou-flow", "quadratic-sr", "linear-p-sr", "readout-task")


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def cmd_verify(cfg: ExperimentConfig, tol: float | None = None) -> tuple[str, int]:
    report = run_suite(cfg.seed, cfg.tolerances, global_tol=tol)
    for name, chk in report.checks.items():
        log.info("%-45s %s residual=%.3e tol=%.1e", name, "PASS" if chk.passed else "FAIL",
                 chk.residual, chk.tolerance)
    text = json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
    return text, 0 if report.overall_pass else 1


def cmd_gpr_track(cfg: ExperimentConfig) -> tuple[str, int]:
    return render_csv(*gpr_track_rows(cfg)), 0


def cmd_ou_flow(cfg: ExperimentConfig) -> tuple[str, int]:
    header, rows = ou_flow_rows(cfg)
    code = 1 if rows and rows[-1][-1] != "ok" else 0
    return render_csv(header, rows), code


def cmd_sr(cfg: ExperimentConfig, kind: str) -> tuple[str, int]:
    return render_csv(*sr_rows(cfg, kind)), 0


def cmd_readout_task(cfg: ExperimentConfig) -> tuple[str, int]:
    try:
        header, rows, passed = readout_task(cfg)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        print(f"metric error: {exc}", file=sys.stderr)
        return "", 1
    return render_csv(header, rows), 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="legendre-sr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if name == "verify":
            p.add_argument("--tol", type=float, default=None, help="override every tolerance")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out = args.out if args.out is not None else cfg.output
        if args.command == "verify":
            text, code = cmd_verify(cfg, args.tol)
        elif args.command == "gpr-track":
            text, code = cmd_gpr_track(cfg)
        elif args.command == "ou-flow":
            text, code = cmd_ou_flow(cfg)
        elif args.command == "quadratic-sr":
            text, code = cmd_sr(cfg, "quadratic")
        elif args.command == "linear-p-sr":
            text, code = cmd_sr(cfg, "linear_p")
        else:
            text, code = cmd_readout_task(cfg)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _emit(text, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
