"""Command-line entry point: ``scalebench run | stats | report``.

Exit codes: 0 success, 1 usage or config error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import __version__
from .dataset_io import DatasetError
from .metrics import METRICS
from .models import ModelError
from .report import aggregate_significance, emit_report, format_rows, write_significance_csv
from .runner import ConfigError, RunConfig, persist, read_results_csv, run_experiment

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2

log = logging.getLogger("scalebench")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; we reserve 2 for I/O errors
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _alpha(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="scalebench", description="Feature scaling benchmark harness.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="{run,stats,report}")
    sub.required = True

    run = sub.add_parser("run", help="run the dataset x model x scaler sweep")
    run.add_argument("-c", "--config", required=True, help="JSON run configuration")
    run.add_argument("--jobs", type=int, default=None, help="worker processes (default: config value)")
    run.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    run.add_argument("--qt-output", choices=("uniform", "normal"), default=None,
                     help="QT output distribution (default: config value)")

    st = sub.add_parser("stats", help="Wilcoxon and Friedman tables from results.csv")
    st.add_argument("--input", required=True, help="results.csv from a run")
    st.add_argument("--metric", required=True, choices=tuple(METRICS))
    st.add_argument("--baseline", default="NO", help="scaler used as the unscaled reference")
    st.add_argument("--alpha", type=_alpha, default=0.01)
    st.add_argument("--csv", default=None, help="also write full-precision rows to this CSV")

    rep = sub.add_parser("report", help="Markdown report (and optional SVG charts)")
    rep.add_argument("--input", required=True, help="results.csv from a run")
    rep.add_argument("--out", required=True, help="Markdown file to write")
    rep.add_argument("--svg", default=None, help="directory for SVG bar charts")
    rep.add_argument("--baseline", default="NO")
    rep.add_argument("--alpha", type=_alpha, default=0.01)
    return p


def cmd_run(args) -> int:
    config = RunConfig.from_json(args.config)
    changes = {}
    if args.qt_output:
        changes["qt_output"] = args.qt_output
    if args.out:
        changes["output_dir"] = Path(args.out)
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    if changes:
        config = dataclasses.replace(config, **changes)
    result = run_experiment(config)
    paths = persist(result, config.output_dir)
    n_failed = result.manifest["n_failed"]
    print(f"{len(result.records)} records ({n_failed} failed) -> {paths['results']}")
    for cell in result.manifest["failed_cells"]:
        print(f"  {cell['dataset']}/{cell['model']}/{cell['scaler']}: {cell['status']}", file=sys.stderr)
    return EXIT_OK


def _load(path: str):
    records = read_results_csv(path)
    if not records:
        raise ConfigError(f"{path}: no records")
    return records


def cmd_stats(args) -> int:
    records = _load(args.input)
    rows = aggregate_significance(records, args.metric, args.baseline, args.alpha)
    if not rows:
        raise ConfigError(f"no successful records report metric {args.metric!r}")
    print(format_rows(rows))
    for r in rows:
        for note in r.notes:
            print(f"note: {r.model}: {note}", file=sys.stderr)
    if args.csv:
        write_significance_csv(rows, args.csv)
    return EXIT_OK


def cmd_report(args) -> int:
    records = _load(args.input)
    rows = {m: aggregate_significance(records, m, args.baseline, args.alpha) for m in METRICS}
    out = emit_report(rows, records, args.out, args.svg, alpha=args.alpha, baseline=args.baseline)
    print(f"report -> {out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "stats": cmd_stats, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ModelError, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
