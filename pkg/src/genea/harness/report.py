"""Suite reports: JSON artifact, Markdown summary and console table."""

import json
from pathlib import Path
from typing import Any

from jinja2 import Environment, PackageLoader, select_autoescape
from rich.console import Console
from rich.table import Table

from genea.harness.suites import ExperimentReport
from genea.logging import logger

TEMPLATE_ENV = Environment(
    loader=PackageLoader("genea", "templates"),
    autoescape=select_autoescape(),
    keep_trailing_newline=True,
)


def _render(template_path: str, context: dict[str, Any]) -> str:
    """Render a Jinja2 template with the given context."""
    template = TEMPLATE_ENV.get_template(template_path)
    return template.render(**context)


def _write_file(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content)
    logger.debug(f"Wrote {path}")


def report_to_json(report: ExperimentReport) -> str:
    return json.dumps(report.as_dict(), indent=2) + "\n"


def render_markdown(report: ExperimentReport) -> str:
    return _render("report.md.j2", {"report": report, "tests": report.tests})


def write_report(report: ExperimentReport, path: Path) -> Path | None:
    """Write the JSON report to ``path`` and its Markdown summary next to it.

    Returns the Markdown path.
    """
    _write_file(path, report_to_json(report))
    summary = path.with_suffix(".md")
    if summary == path:
        return None
    _write_file(summary, render_markdown(report))
    return summary


def report_table(report: ExperimentReport) -> Table:
    status = "[green]PASS[/green]" if report.passed else "[red]FAIL[/red]"
    table = Table(title=f"{report.suite} (seed {report.seed}): {status}")
    table.add_column("Test")
    table.add_column("Statistic", justify="right")
    table.add_column("Threshold", justify="right")
    table.add_column("n", justify="right")
    table.add_column("Result")
    for verdict in report.tests:
        table.add_row(
            verdict.name,
            f"{verdict.statistic:.6g}",
            f"{verdict.threshold:.6g}",
            str(verdict.n_samples),
            "[green]pass[/green]" if verdict.passed else "[red]fail[/red]",
        )
    return table


def print_report(report: ExperimentReport, console: Console) -> None:
    console.print(report_table(report))
