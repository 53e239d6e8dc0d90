"""Logging for genea: Rich on a terminal, JSON lines for batch runs.

GENEA_ENV selects the handler ("development" gives Rich, anything else
JSON) and GENEA_LOG_LEVEL the initial level. All records go to stderr.
"""

import json
import logging
import os
from typing import Any

from rich.console import Console
from rich.logging import RichHandler

from genea.exceptions import ConfigError

LOGGER_NAME = "genea"
LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

_RECORD_FIELDS = frozenset(logging.LogRecord("", 0, "", 0, "", (), None).__dict__) | {
    "message"
}


def _extras(record: logging.LogRecord) -> dict[str, Any]:
    """Fields passed through ``extra=`` (seed, suite, reps, ...)."""
    return {k: v for k, v in record.__dict__.items() if k not in _RECORD_FIELDS}


class _JSONFormatter(logging.Formatter):
    """One JSON object per record; extras under ``extra``."""

    def format(self, record: logging.LogRecord) -> str:
        entry: dict[str, Any] = {
            "timestamp": self.formatTime(record),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        extras = _extras(record)
        if extras:
            entry["extra"] = extras
        if record.exc_info and record.exc_info[0] is not None:
            entry["exception"] = self.formatException(record.exc_info)
        # numpy scalars and paths are not JSON types
        return json.dumps(entry, default=str)


class _RichExtraFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        message = record.getMessage()
        extras = _extras(record)
        if extras:
            fields = " ".join(f"{k}={v}" for k, v in extras.items())
            message = f"{message}  [{fields}]"
        return message


def set_level(level: str) -> None:
    """Change the genea logger's level, e.g. from the ``--log-level`` option."""
    name = level.upper()
    if name not in LEVELS:
        choices = ", ".join(LEVELS)
        raise ConfigError(f"log level must be one of {choices}, got {level!r}")
    logging.getLogger(LOGGER_NAME).setLevel(name)


def _setup_logger() -> logging.Logger:
    log = logging.getLogger(LOGGER_NAME)
    if log.handlers:
        return log

    level = os.environ.get("GENEA_LOG_LEVEL", "INFO").upper()
    log.setLevel(level if level in LEVELS else "INFO")
    log.propagate = False

    # stdout carries tables and exported trees
    if os.environ.get("GENEA_ENV", "development") == "development":
        handler: logging.Handler = RichHandler(
            console=Console(stderr=True),
            rich_tracebacks=True,
            show_time=True,
            show_path=False,
        )
        handler.setFormatter(_RichExtraFormatter())
    else:
        handler = logging.StreamHandler()
        handler.setFormatter(_JSONFormatter())

    log.addHandler(handler)
    return log


logger = _setup_logger()
