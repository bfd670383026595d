"""Command-line entry point for the localization experiments.

Usage:
    conemapr --mode single-shot --seed 7 --range 1000 --noise 1e-4
    conemapr --mode noise-sweep --config sweep.json --out results/
    conemapr --mode range-sweep --geometries 5 --runs 200 --no-plot
    conemapr --mode crlb-only --config sweep.json

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import json
import logging
import os
import sys
from pathlib import Path

import click
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from conemapr.config import settings
from conemapr.exceptions import (
    ConfigError,
    DegenerateGeometryError,
    DivergenceError,
    DomainError,
    RejectionOverflowError,
    SingularFimError,
    SolverError,
)
from conemapr.schemas.estimator import EstimatorConfig
from conemapr.schemas.montecarlo import SingleShotReport
from conemapr.schemas.run_config import RunConfig, RunMode
from conemapr.services import montecarlo, report
from conemapr.services.conic import write_problem
from conemapr.services.estimator import pass_a_problem

logger = logging.getLogger(__name__)

app = typer.Typer(help="Near/far-field conical source localization in MPR")
console = Console()

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (
    SolverError,
    SingularFimError,
    DivergenceError,
    DegenerateGeometryError,
    RejectionOverflowError,
    DomainError,
)


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else settings.log_level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def load_config(path: Path | None, overrides: dict) -> RunConfig:
    """Flat JSON file merged with the flags that were given (flags win).

    Raises:
        ConfigError: unreadable file or invalid values
    """
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config file: {e}", field="config", value=path) from e
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object", field="config", value=path)

    data.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or None
        raise ConfigError(f"invalid configuration: {first['msg']}", field=field) from e


def _prepare_output(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create output directory: {e}", field="out", value=out) from e
    if not os.access(out, os.W_OK):
        raise ConfigError("output directory is not writable", field="out", value=out)


def _print_single_shot(shot: SingleShotReport) -> None:
    table = Table(title="Single shot")
    table.add_column("Parameter", style="cyan")
    table.add_column("Truth", style="green")
    for label in shot.estimates:
        table.add_column(label, style="magenta")
    table.add_column("CRLB std", style="yellow")

    names = ("azimuth (rad)", "elevation (rad)", "inverse range (1/m)")
    fields = ("azimuth", "elevation", "inverse_range")
    for name, field, std in zip(names, fields, shot.crlb_std):
        row = [name, f"{getattr(shot.truth, field):.6g}"]
        for estimate in shot.estimates.values():
            row.append(f"{getattr(estimate, field):.6g}" if estimate is not None else "-")
        row.append(f"{std:.3g}")
        table.add_row(*row)

    console.print()
    console.print(table)
    console.print(f"  eig ratio: {shot.eig_ratio:.3e}")
    if shot.flags:
        console.print(f"  [yellow]⚠[/yellow] flags: {', '.join(shot.flags)}")
    console.print()


def _run_single_shot(cfg: RunConfig) -> None:
    params = cfg.geometry_params()
    if cfg.dump_problem:
        scenario, angles = montecarlo.single_shot_scenario(
            cfg.seed, params, cfg.source_range, cfg.noise_power
        )
        write_problem(
            pass_a_problem(scenario, angles, EstimatorConfig(tol=cfg.tol)),
            cfg.out / "problem.txt",
        )

    shot = montecarlo.run_single_shot(
        cfg.seed,
        params,
        cfg.source_range,
        cfg.noise_power,
        estimators=cfg.estimators,
        tol=cfg.tol,
    )
    _print_single_shot(shot)


def _run_sweep(cfg: RunConfig) -> None:
    sweep = cfg.sweep_config()
    params = cfg.geometry_params()
    axis = cfg.sweep_axis
    if cfg.mode == RunMode.CRLB_ONLY:
        records_iter = montecarlo.iter_crlb_only(sweep, params, axis)
    else:
        records_iter = montecarlo.iter_sweep(sweep, params, axis)
    if cfg.dump_problem:
        logger.warning("--dump-problem only applies to single-shot runs")

    records = []
    # rows are flushed as each axis value completes, so a failure keeps what was done
    with report.ResultsWriter(cfg.out / report.RESULTS_FILE) as writer:
        for record in records_iter:
            writer.write(record)
            records.append(record)

    if cfg.plot:
        report.plot_results(records, axis, cfg.out, db=cfg.db)
    console.print(f"\n[green]✓[/green] {len(records)} rows written to [bold]{cfg.out}[/bold]\n")


@app.command()
def conemapr(
    mode: RunMode | None = typer.Option(None, "--mode", "-m", help="Experiment to run"),
    config: Path | None = typer.Option(None, "--config", "-c", help="Flat JSON run config"),
    seed: int | None = typer.Option(None, "--seed", help="Master seed"),
    sensors: int | None = typer.Option(None, "--sensors", help="Number of sensor arrays"),
    source_range: float | None = typer.Option(None, "--range", help="Source range (m)"),
    noise: float | None = typer.Option(None, "--noise", help="Noise power (rad^2)"),
    geometries: int | None = typer.Option(None, "--geometries", help="Random geometries"),
    runs: int | None = typer.Option(None, "--runs", help="Runs per geometry"),
    out: Path | None = typer.Option(None, "--out", "-o", help="Output directory"),
    plot: bool = typer.Option(True, "--plot/--no-plot", help="Write SVG plots"),
    threads: int | None = typer.Option(None, "--threads", help="Worker processes"),
    tol: float | None = typer.Option(None, "--tol", help="Conic solver tolerance"),
    db: bool = typer.Option(False, "--db", help="Plot MSE in dB"),
    dump_problem: bool = typer.Option(
        False, "--dump-problem", help="Write the single-shot conic problem to problem.txt"
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Run a localization experiment and write its results."""
    _configure_logging(verbose)

    # flags left at their defaults do not override the config file
    overrides = {
        "mode": mode,
        "seed": seed,
        "sensors": sensors,
        "range": source_range,
        "noise": noise,
        "geometries": geometries,
        "runs": runs,
        "out": out,
        "plot": None if plot else False,
        "threads": threads,
        "tol": tol,
        "db": db or None,
        "dump_problem": dump_problem or None,
    }
    try:
        cfg = load_config(config, overrides)
        _prepare_output(cfg.out)
    except ConfigError as e:
        console.print(f"\n[red]✗[/red] {e.message}\n")
        raise typer.Exit(code=EXIT_CONFIG)

    report.write_run_meta(cfg.out / report.META_FILE, cfg.seed, cfg.model_dump_json())
    logger.info(f"Running {cfg.mode.value} with seed {cfg.seed}")

    try:
        if cfg.mode == RunMode.SINGLE_SHOT:
            _run_single_shot(cfg)
        else:
            _run_sweep(cfg)
    except NUMERICAL_ERRORS as e:
        logger.error(f"{e.code}: {e.message} {e.details}")
        console.print(f"\n[red]✗[/red] numerical failure: {e.message}\n")
        raise typer.Exit(code=EXIT_NUMERICAL)


def main(argv: list[str] | None = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    try:
        code = app(args=argv, prog_name="conemapr", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        return 1
    return code if isinstance(code, int) else 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
