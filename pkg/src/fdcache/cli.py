"""Command line: run experiment sweeps and echo effective configurations.

    fdcache run <config> [--preset fig2|fig3] [--out PATH] [--seed N] [--trials N]
                         [--mode correlated|uncorrelated] [--workers N]
    fdcache show-config [<config>] [--preset fig2|fig3]

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
Results go to CSV; the summary table and ``show-config`` go to stdout,
logs to stderr.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

import structlog
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from shared.errors import ConfigError, NumericalError, ResultsIOError

from . import __version__
from .experiment import (
    ExperimentSpec,
    ResultRow,
    apply_overrides,
    dump_config,
    load_config,
    preset_path,
    run_experiment,
    series_path,
    write_results,
)
from .simulator import CorrelationMode

log = structlog.get_logger(__name__)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

console = Console()
err_console = Console(stderr=True)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdcache", description="Cache-aided full-duplex small-cell network experiments."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run an experiment sweep and write CSV results.")
    run.add_argument("config", nargs="?", type=Path, help="Experiment file (key = value).")
    run.add_argument("--preset", help="Preset the config file overrides (fig2, fig3).")
    run.add_argument("--out", type=Path, help="CSV path (default results/<name>.csv).")
    run.add_argument("--seed", type=int, help="Override the experiment seed.")
    run.add_argument("--trials", type=int, help="Override trials per sweep point.")
    run.add_argument(
        "--mode", choices=[m.value for m in CorrelationMode], help="Override the correlation mode."
    )
    run.add_argument("--workers", type=int, help="Override the trial worker count.")

    show = commands.add_parser("show-config", help="Print the effective configuration.")
    show.add_argument("config", nargs="?", type=Path, help="Experiment file (key = value).")
    show.add_argument("--preset", help="Preset the config file overrides (fig2, fig3).")
    return parser


def _load(args: argparse.Namespace) -> ExperimentSpec:
    if args.config is None and args.preset is None:
        raise ConfigError("give an experiment file, a --preset, or both")
    if args.config is None:
        return load_config(preset_path(args.preset))
    base = preset_path(args.preset) if args.preset else None
    return load_config(args.config, base=base)


def _summary(spec: ExperimentSpec, rows: list[ResultRow]) -> Table:
    table = Table(title=f"{spec.name}: {spec.metric.value} vs {spec.sweep.value}", show_lines=False)
    if spec.series is not None:
        table.add_column(spec.series.value, style="bold magenta", justify="right")
    table.add_column(spec.sweep.value, style="bold cyan", justify="right")
    table.add_column("analytic", justify="right")
    table.add_column("simulated", justify="right")
    table.add_column("±95%", justify="right", style="dim")
    table.add_column("trials", justify="right")
    table.add_column("wall s", justify="right", style="dim")

    def fmt(value: float | None) -> str:
        return "—" if value is None else f"{value:.6g}"

    for row in rows:
        cells = [
            fmt(row.sweep_value),
            fmt(row.analytic),
            fmt(row.sim_mean),
            fmt(row.ci95),
            "—" if row.trials is None else str(row.trials),
            f"{row.wall_s:.2f}",
        ]
        if spec.series is not None:
            cells.insert(0, fmt(row.series_value))
        table.add_row(*cells)
    return table


def _write(spec: ExperimentSpec, rows: list[ResultRow], out: Path) -> list[Path]:
    if spec.series is None:
        write_results(rows, out)
        return [out]
    written: list[Path] = []
    for value in spec.series_values:
        target = series_path(out, spec.series, value)
        write_results([r for r in rows if r.series_value == value], target)
        written.append(target)
    return written


def _run(args: argparse.Namespace) -> int:
    spec = _load(args)
    spec = apply_overrides(
        spec, seed=args.seed, trials=args.trials, mode=args.mode, workers=args.workers
    )
    rows = run_experiment(spec)
    console.print(_summary(spec, rows))
    out = args.out or Path("results") / f"{spec.name}.csv"
    for path in _write(spec, rows, out):
        console.print(f"[dim]wrote {path}[/dim]")
    return 0


def _show_config(args: argparse.Namespace) -> int:
    sys.stdout.write(dump_config(_load(args)))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``fdcache`` console script; returns the exit code."""
    args = _build_parser().parse_args(argv)
    handler = _run if args.command == "run" else _show_config
    try:
        return handler(args)
    except ConfigError as exc:
        err_console.print(f"[red]config error:[/red] {escape(str(exc))}")
        return EXIT_CONFIG
    except NumericalError as exc:
        log.error("numerical_failure", error=str(exc), notes=getattr(exc, "__notes__", []))
        err_console.print(f"[red]numerical error:[/red] {escape(str(exc))}")
        return EXIT_NUMERICAL
    except (ResultsIOError, OSError) as exc:
        err_console.print(f"[red]I/O error:[/red] {escape(str(exc))}")
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
