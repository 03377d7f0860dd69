"""Command-line experiment runner.

Verbs:
    backtest     run the configured methods over the evaluation span and
                 write the report files
    grid-search  score OLNV on the validation span for every (mu, eta) cell
    synth        generate a synthetic stream and export it as a stream CSV
    report       re-render the plain-text summary from stored outputs

Exit codes: 0 success, 2 config error, 3 data error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .data import SynthConfig, synth_stream, write_stream_csv
from .errors import ConfigError, DataError, SolverError
from .experiments import (
    BacktestReport,
    MethodResult,
    emit_reports,
    grid_search,
    parse_experiment_config,
    run_backtest,
    render_summary,
    write_grid_csv,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SOLVER = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olnv",
        description="Backtest online and batch offering strategies for a stochastic producer.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_back = sub.add_parser("backtest", help="run a configured backtest")
    p_back.add_argument("--config", required=True, help="experiment YAML")
    p_back.add_argument("--seed", type=int, default=None, help="override the synthetic seed")
    p_back.add_argument("--out", default=None, help="output directory (overrides config)")
    p_back.add_argument(
        "--methods", default=None, help="comma-separated subset of FO,OLNV,LP,LP2,FX"
    )

    p_grid = sub.add_parser("grid-search", help="tune (mu, eta) on the validation span")
    p_grid.add_argument("--config", required=True, help="experiment YAML with grid/validation")
    p_grid.add_argument("--seed", type=int, default=None)
    p_grid.add_argument("--out", default=None)
    p_grid.add_argument("--mus", default=None, help="comma-separated mu grid")
    p_grid.add_argument("--etas", default=None, help="comma-separated eta grid")

    p_synth = sub.add_parser("synth", help="export a generated stream as CSV")
    p_synth.add_argument("--config", required=True, help="experiment YAML with a synth source")
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.add_argument("--out", required=True, help="output CSV path")

    p_report = sub.add_parser("report", help="re-render a summary from stored outputs")
    p_report.add_argument("--out", required=True, help="directory holding metrics.csv")
    return parser


def _load_config(args):
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return _apply_overrides(parse_experiment_config(path), args)


def _apply_overrides(config, args):
    if getattr(args, "seed", None) is not None:
        if not isinstance(config.source, SynthConfig):
            raise ConfigError("--seed only applies to synthetic sources")
        config = replace(config, source=replace(config.source, seed=args.seed))
    if getattr(args, "out", None) is not None:
        config = replace(config, output_dir=args.out)
    if getattr(args, "methods", None):
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
        config = replace(config, methods=methods)
    return config


def _cmd_backtest(args) -> int:
    config = _load_config(args)
    if config.output_dir is None:
        raise ConfigError("no output directory: set 'output' in the config or pass --out")
    report = run_backtest(config)
    written = emit_reports(report, config.output_dir)
    print(render_summary(report))
    print(f"wrote {len(written)} files to {config.output_dir}")
    return EXIT_OK


def _cmd_grid_search(args) -> int:
    config = _load_config(args)
    mus = [float(v) for v in args.mus.split(",")] if args.mus else None
    etas = [float(v) for v in args.etas.split(",")] if args.etas else None
    result = grid_search(config, mus=mus, etas=etas)
    for i, eta in enumerate(result.etas):
        row = "  ".join(f"{v:8.2f}" for v in result.table[i])
        print(f"eta={eta:<10g} {row}")
    print(f"best: mu={result.best_mu:g} eta={result.best_eta:g}")
    if config.output_dir is not None:
        path = write_grid_csv(result, config.output_dir)
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    config = _load_config(args)
    if not isinstance(config.source, SynthConfig):
        raise ConfigError("synth requires a config with source.kind: synth")
    samples = synth_stream(config.source)
    write_stream_csv(samples, args.out)
    print(f"wrote {len(samples)} hours to {args.out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    metrics_path = Path(args.out) / "metrics.csv"
    if not metrics_path.exists():
        raise DataError(f"{metrics_path} not found; run a backtest first")
    timings: dict[str, float] = {}
    timings_path = Path(args.out) / "timings.csv"
    if timings_path.exists():
        with timings_path.open(newline="") as fh:
            for row in csv.DictReader(fh):
                timings[row["method"]] = float(row["decision_time_s"])
    methods: dict[str, MethodResult] = {}
    with metrics_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["method", "deviation_cost", "improvement_pct"]:
            raise DataError(f"{metrics_path}: unexpected columns {reader.fieldnames}")
        for row in reader:
            try:
                methods[row["method"]] = MethodResult(
                    name=row["method"],
                    offers=None,
                    losses=None,
                    deviation_cost=float(row["deviation_cost"]),
                    improvement_pct=(
                        None if row["improvement_pct"] == "" else float(row["improvement_pct"])
                    ),
                    decision_time_s=timings.get(row["method"], float("nan")),
                )
            except (ValueError, KeyError) as exc:
                raise DataError(f"{metrics_path}: unparseable row {row!r}: {exc}") from exc
    report = BacktestReport(
        experiment=str(Path(args.out)),
        seed=None,
        eval_start=0,
        eval_len=0,
        methods=methods,
        regret_series={},
    )
    print(render_summary(report))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "backtest": _cmd_backtest,
        "grid-search": _cmd_grid_search,
        "synth": _cmd_synth,
        "report": _cmd_report,
    }
    try:
        return handlers[args.verb](args)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    except DataError as exc:
        logger.error("data error: %s", exc)
        return EXIT_DATA
    except SolverError as exc:
        logger.error("solver failure: %s", exc)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
