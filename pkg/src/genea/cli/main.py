"""Typer CLI entry point for genea."""

import os
from dataclasses import replace
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Any

import typer
from rich.console import Console
from rich.table import Table

from genea import __version__
from genea.cli.config import RunConfig, resolve_config
from genea.core.params import BranchingParams, RngStream
from genea.exceptions import ConfigError, GeneaError
from genea.harness.report import print_report, write_report
from genea.harness.suites import SuiteConfig, run_suite
from genea.lengths import length_scaling, write_coupled_csv, write_length_csv
from genea.logging import logger, set_level
from genea.sampling.samplers import (
    sample_conditional_tmrca,
    sample_dynamic_h,
    sample_dynamic_v,
    sample_full_ancestral,
    sample_static,
    sample_static_conditional_z0,
)
from genea.tree.ancestral import AncestralProcess, tmrca, total_length
from genea.tree.export import (
    process_from_json,
    process_to_csv,
    process_to_json,
    to_newick,
)

app = typer.Typer(
    name="genea",
    help="Exact genealogies of a stationary quadratic branching population.",
    no_args_is_help=True,
)

console = Console()

EXTENSIONS = {"newick": "nwk", "json": "json", "csv": "csv"}


class SamplerChoice(StrEnum):
    static = "static"
    dynamic_v = "dynamic-v"
    dynamic_h = "dynamic-h"
    conditional = "conditional"
    full = "full"


class FormatChoice(StrEnum):
    newick = "newick"
    json = "json"
    csv = "csv"


class SuiteChoice(StrEnum):
    distributions = "distributions"
    metric_oracle = "metric-oracle"
    sampler_equality = "sampler-equality"
    eex = "eex"
    laplace = "laplace"
    length_moments = "length-moments"
    stationary = "stationary"
    conditional = "conditional"


BetaOption = Annotated[float | None, typer.Option("--beta", help="Branching rate beta")]
ThetaOption = Annotated[
    float | None, typer.Option("--theta", help="Drift theta (> 0 for samplers)")
]
SeedOption = Annotated[int | None, typer.Option("--seed", help="Random seed")]
RepsOption = Annotated[int | None, typer.Option("--reps", help="Replicates")]
ThreadsOption = Annotated[
    int | None, typer.Option("--threads", help="Worker threads for replicates")
]
ConfigOption = Annotated[
    Path | None,
    typer.Option(
        "--config", "-c", help="TOML file of run settings", exists=True, dir_okay=False
    ),
]
OutputOption = Annotated[
    Path | None, typer.Option("--output", "-o", help="Output file")
]


def version_callback(value: bool) -> None:
    if value:
        typer.echo(f"genea {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: Annotated[
        bool | None,
        typer.Option(
            "--version",
            "-v",
            help="Show version and exit.",
            callback=version_callback,
            is_eager=True,
        ),
    ] = None,
    log_level: Annotated[
        str | None,
        typer.Option("--log-level", help="DEBUG, INFO, WARNING or ERROR"),
    ] = None,
) -> None:
    """genea: sample, export and validate genealogies of branching populations."""
    if log_level is not None:
        try:
            set_level(log_level)
        except ConfigError as e:
            raise typer.BadParameter(str(e)) from e


def _resolve(flags: dict[str, Any], config_file: Path | None) -> RunConfig:
    try:
        return resolve_config(flags, config_file)
    except ConfigError as e:
        raise typer.BadParameter(str(e)) from e


def _fail(error: GeneaError) -> typer.Exit:
    logger.error(str(error))
    return typer.Exit(code=1)


def _draw(config: RunConfig, rng: RngStream) -> AncestralProcess:
    params = config.params
    if config.z0 is not None and config.sampler not in ("static", "full"):
        raise typer.BadParameter(
            f"--z0 does not apply to the {config.sampler} sampler"
        )
    match config.sampler:
        case "static" if config.z0 is not None:
            return sample_static_conditional_z0(params, config.n, config.z0, rng)[1]
        case "static":
            return sample_static(params, config.n, rng)[1]
        case "dynamic-v":
            return sample_dynamic_v(params, config.n, rng).final
        case "dynamic-h":
            return sample_dynamic_h(params, config.n, rng).final
        case "conditional":
            return sample_conditional_tmrca(params, config.n, config.h, rng)[1]
        case _:
            bounds = None if config.z0 is None else (config.z0 / 2, config.z0 / 2)
            return sample_full_ancestral(params, config.eps, rng, bounds)


def _serialize(ap: AncestralProcess, params: BranchingParams, fmt: str) -> str:
    match fmt:
        case "newick":
            return to_newick(ap) + "\n"
        case "json":
            return process_to_json(ap, params)
        case _:
            return process_to_csv(ap)


def _env_seed() -> int | None:
    raw = os.environ.get("GENEA_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise typer.BadParameter(
            f"GENEA_SEED must be an integer, got {raw!r}"
        ) from None


def _resolve_seed(config: RunConfig, seed: int) -> RunConfig:
    try:
        return replace(config, seed=seed)
    except ConfigError as e:
        raise typer.BadParameter(str(e)) from e


@app.command()
def sample(
    sampler: Annotated[
        SamplerChoice | None, typer.Option("--sampler", "-s", help="Sampler to use")
    ] = None,
    beta: BetaOption = None,
    theta: ThetaOption = None,
    n: Annotated[int | None, typer.Option("--n", help="Sampled individuals")] = None,
    h: Annotated[
        float | None, typer.Option("--h", help="Population tree height (conditional)")
    ] = None,
    eps: Annotated[
        float | None, typer.Option("--eps", help="Truncation depth (full)")
    ] = None,
    z0: Annotated[
        float | None, typer.Option("--z0", help="Fix the population size")
    ] = None,
    seed: SeedOption = None,
    fmt: Annotated[
        FormatChoice | None, typer.Option("--format", "-f", help="Output format")
    ] = None,
    output: OutputOption = None,
    config_file: ConfigOption = None,
) -> None:
    """Sample one genealogy and write it to a file."""
    config = _resolve(
        {
            "sampler": sampler.value if sampler else None,
            "beta": beta,
            "theta": theta,
            "n": n,
            "h": h,
            "eps": eps,
            "z0": z0,
            "seed": seed,
            "format": fmt.value if fmt else None,
            "output": output,
        },
        config_file,
    )
    if config.seed is None:
        env_seed = _env_seed()
        if env_seed is None:
            raise typer.BadParameter("give --seed, a config seed or GENEA_SEED")
        config = _resolve_seed(config, env_seed)
    path = config.output or Path(f"genea-sample.{EXTENSIONS[config.format]}")
    logger.info(
        "Sampling",
        extra={"sampler": config.sampler, "n": config.n, "seed": config.seed},
    )
    try:
        ap = _draw(config, RngStream(config.seed))
        content = _serialize(ap, config.params, config.format)
    except GeneaError as e:
        raise _fail(e) from e
    path.write_text(content)
    logger.info(f"Wrote {path}")

    table = Table(title=f"{config.sampler} sample")
    table.add_column("total_length", justify="right")
    table.add_column("tmrca", justify="right")
    table.add_row(repr(total_length(ap)), repr(tmrca(ap)))
    console.print(table)


@app.command()
def validate(
    suite: Annotated[
        SuiteChoice | None, typer.Option("--suite", help="Acceptance suite to run")
    ] = None,
    seed: SeedOption = None,
    reps: RepsOption = None,
    beta: BetaOption = None,
    theta: ThetaOption = None,
    n: Annotated[int | None, typer.Option("--n", help="Sample size")] = None,
    eps: Annotated[float | None, typer.Option("--eps", help="Truncation depth")] = None,
    z0: Annotated[float | None, typer.Option("--z0", help="Population size")] = None,
    h: Annotated[float | None, typer.Option("--h", help="Tree height")] = None,
    threads: ThreadsOption = None,
    output: OutputOption = None,
    config_file: ConfigOption = None,
) -> None:
    """Run an acceptance suite; exit 0 iff every verdict passes."""
    config = _resolve(
        {
            "suite": suite.value if suite else None,
            "seed": seed,
            "reps": reps,
            "beta": beta,
            "theta": theta,
            "n": n,
            "eps": eps,
            "z0": z0,
            "h": h,
            "threads": threads,
            "output": output,
        },
        config_file,
    )
    if config.suite is None:
        raise typer.BadParameter("give --suite or a config suite")
    if config.seed is None:
        raise typer.BadParameter("validate needs --seed (or a config seed)")
    path = config.output or Path(f"genea-{config.suite}.json")
    try:
        settings = SuiteConfig(
            params=config.params,
            reps=config.reps,
            n=config.n,
            eps=config.eps,
            z0=config.z0,
            h=config.h,
            threads=config.threads,
        )
        report = run_suite(config.suite, settings, RngStream(config.seed))
    except GeneaError as e:
        raise _fail(e) from e
    write_report(report, path)
    print_report(report, console)
    logger.info(f"Wrote {path}")
    if not report.passed:
        raise typer.Exit(code=1)


@app.command("length-scaling")
def length_scaling_cmd(
    n_grid: Annotated[
        list[int] | None, typer.Option("--n-grid", help="Sample sizes, repeatable")
    ] = None,
    z0: Annotated[float | None, typer.Option("--z0", help="Population size")] = None,
    seed: SeedOption = None,
    reps: RepsOption = None,
    beta: BetaOption = None,
    theta: ThetaOption = None,
    threads: ThreadsOption = None,
    output: OutputOption = None,
    config_file: ConfigOption = None,
) -> None:
    """Per-replicate lengths and coupled second moments over a grid of n (CSV)."""
    config = _resolve(
        {
            "n_grid": tuple(n_grid) if n_grid else None,
            "z0": z0,
            "seed": seed,
            "reps": reps,
            "beta": beta,
            "theta": theta,
            "threads": threads,
            "output": output,
        },
        config_file,
    )
    if config.seed is None:
        raise typer.BadParameter("length-scaling needs --seed (or a config seed)")
    path = config.output or Path("genea-lengths.csv")
    coupled_path = path.with_name(f"{path.stem}-coupled.csv")
    z0_value = 1.0 if config.z0 is None else config.z0
    try:
        scaling = length_scaling(
            config.params,
            z0_value,
            config.n_grid,
            config.reps,
            RngStream(config.seed),
            config.threads,
        )
    except GeneaError as e:
        raise _fail(e) from e
    write_length_csv(scaling.rows, path)
    write_coupled_csv(scaling.coupled, coupled_path)
    logger.info(f"Wrote {path} and {coupled_path}")

    table = Table(title=f"Coupled second moments (z0={z0_value:g})")
    for column in ("n", "eps", "second_moment", "se", "scaled"):
        table.add_column(column, justify="right")
    for m in scaling.coupled:
        table.add_row(
            str(m.n),
            f"{m.eps:.6g}",
            f"{m.second_moment:.6g}",
            f"{m.se:.3g}",
            f"{m.scaled:.6g}",
        )
    console.print(table)
    console.print(
        f"fitted C = {scaling.fitted_c:.6g}, decreasing = {scaling.decreasing}"
    )


@app.command()
def export(
    source: Annotated[
        Path,
        typer.Argument(
            help="Ancestral process JSON written by 'sample --format json'",
            exists=True,
            dir_okay=False,
        ),
    ],
    fmt: Annotated[
        FormatChoice, typer.Option("--format", "-f", help="Output format")
    ] = FormatChoice.newick,
    output: OutputOption = None,
) -> None:
    """Convert a saved ancestral process to Newick, JSON or CSV."""
    try:
        params, ap = process_from_json(source.read_text())
        content = _serialize(ap, params, fmt.value)
    except GeneaError as e:
        raise _fail(e) from e
    if output is None:
        typer.echo(content, nl=False)
        return
    output.write_text(content)
    logger.info(f"Wrote {output}")
