"""Command-line entry point.

    squeezeband <mode> --config <path> [--seed N] [--out <path>]

Exit status: 0 on success, 2 for a configuration error, 3 for a numerical
failure. ``SQUEEZEBAND_THREADS`` sets the worker-thread count.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness, io
from .errors import ConfigError, ConvergenceError, ParameterError, SqueezebandError, ThresholdError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("squeezeband")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="squeezeband", description=__doc__.split("\n\n")[0])
    p.add_argument("mode", choices=harness.MODES)
    p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default=None, help="output file (stdout when omitted)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _sidecar(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def _emit_tables(out, main: harness.Table, extras: dict, meta: dict | None):
    """Write the main table to ``out`` (or stdout) and extras next to it."""
    if out is None:
        sys.stdout.write(io.csv_text(main.header, main.rows))
        return
    out = Path(out)
    io.write_csv(out, main.header, main.rows)
    for suffix, table in extras.items():
        io.write_csv(_sidecar(out, f".{suffix}.csv"), table.header, table.rows)
    if meta is not None:
        io.write_json(_sidecar(out, ".meta.json"), meta)


def _emit_json(out, obj):
    if out is None:
        sys.stdout.write(io.json_text(obj))
    else:
        io.write_json(out, obj)


def run(cfg: harness.RunConfig) -> int:
    if cfg.mode == "steady-state":
        model = harness.build_model(cfg.params)
        _emit_json(cfg.out, harness.steady_state_report(model, rsb=bool(cfg.options.get("rsb"))))
    elif cfg.mode == "sweep":
        _emit_tables(cfg.out, harness.run_sweep(cfg), {}, None)
    elif cfg.mode == "simulate":
        tables = harness.run_simulate(cfg)
        main_key = "trajectory" if "trajectory" in tables else "truth"
        extras = {k: t for k, t in tables.items() if k != main_key}
        if cfg.out is None and extras:
            log.warning("no --out given: only the %s table is written", main_key)
        _emit_tables(cfg.out, tables[main_key], extras, None)
    elif cfg.mode == "filter-verify":
        _emit_json(cfg.out, harness.run_filter_verify(cfg))
    elif cfg.mode == "figure":
        result = harness.run_figure(cfg.figure["which"], cfg.figure)
        extras = {k: v for k, v in result.items() if isinstance(v, harness.Table) and k != "data"}
        _emit_tables(cfg.out, result["data"], extras, result.get("meta"))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"squeezeband: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = harness.parse_config(doc, mode=args.mode, seed=args.seed, out=args.out)
        return run(cfg)
    except (ConfigError, ParameterError) as exc:
        print(f"squeezeband: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, ThresholdError, SqueezebandError, FloatingPointError,
            ArithmeticError) as exc:
        print(f"squeezeband: numerical failure: {exc}", file=sys.stderr)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(f"squeezeband: diagnostics: {diag}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
