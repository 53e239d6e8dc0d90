"""Run configuration resolved from flags, a TOML file and defaults, in that order."""

import math
import tomllib
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from genea.core.params import BranchingParams
from genea.defaults import (
    DEFAULT_BETA,
    DEFAULT_EPS,
    DEFAULT_FORMAT,
    DEFAULT_N,
    DEFAULT_N_GRID,
    DEFAULT_REPS,
    DEFAULT_SAMPLER,
    DEFAULT_THETA,
    DEFAULT_THREADS,
    FORMAT_CHOICES,
    SAMPLER_CHOICES,
    SUITE_CHOICES,
)
from genea.exceptions import ConfigError
from genea.logging import logger

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RunConfig:
    beta: float = DEFAULT_BETA
    theta: float = DEFAULT_THETA
    n: int = DEFAULT_N
    h: float | None = None
    eps: float = DEFAULT_EPS
    z0: float | None = None
    reps: int = DEFAULT_REPS
    seed: int | None = None
    sampler: str = DEFAULT_SAMPLER
    format: str = DEFAULT_FORMAT
    output: Path | None = None
    threads: int = DEFAULT_THREADS
    suite: str | None = None
    n_grid: tuple[int, ...] = DEFAULT_N_GRID

    def __post_init__(self) -> None:
        _require_real(self.beta, "beta", minimum=0.0, strict=True)
        _require_real(self.theta, "theta", minimum=0.0, strict=False)
        _require_real(self.eps, "eps", minimum=0.0, strict=True)
        for name in ("h", "z0"):
            if getattr(self, name) is not None:
                _require_real(getattr(self, name), name, minimum=0.0, strict=True)
        for name in ("n", "reps", "threads"):
            _require_int(getattr(self, name), name, minimum=1)
        if self.seed is not None:
            _require_int(self.seed, "seed", minimum=0)
            if self.seed > _UINT64_MAX:
                raise ConfigError("seed must fit in an unsigned 64-bit integer")
        _require_choice(self.sampler, "sampler", SAMPLER_CHOICES)
        _require_choice(self.format, "format", FORMAT_CHOICES)
        if self.suite is not None:
            _require_choice(self.suite, "suite", SUITE_CHOICES)
        if not self.n_grid:
            raise ConfigError("n_grid must not be empty")
        for value in self.n_grid:
            _require_int(value, "n_grid entries", minimum=2)
        if self.sampler == "conditional" and self.h is None:
            raise ConfigError("the conditional sampler needs h (--h)")

    @property
    def params(self) -> BranchingParams:
        return BranchingParams(self.beta, self.theta)


def _require_real(value: Any, name: str, minimum: float, strict: bool) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    below = value <= minimum if strict else value < minimum
    if not math.isfinite(value) or below:
        relation = ">" if strict else ">="
        raise ConfigError(
            f"{name} must be finite and {relation} {minimum}, got {value}"
        )


def _require_int(value: Any, name: str, minimum: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")


def _require_choice(value: Any, name: str, choices: list[str]) -> None:
    if value not in choices:
        raise ConfigError(f"{name} must be one of {', '.join(choices)}, got {value!r}")


_FIELDS = frozenset(f.name for f in fields(RunConfig))


def load_config_file(path: Path) -> dict[str, Any]:
    """Flat ``key = value`` TOML whose keys are RunConfig field names."""
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown keys in {path}: {', '.join(unknown)}")
    if "output" in data:
        data["output"] = Path(str(data["output"]))
    if "n_grid" in data:
        if not isinstance(data["n_grid"], list):
            raise ConfigError(f"n_grid in {path} must be a list of integers")
        data["n_grid"] = tuple(data["n_grid"])
    logger.debug("Loaded config file", extra={"path": str(path), "keys": sorted(data)})
    return data


def resolve_config(
    flags: dict[str, Any], config_file: Path | None = None
) -> RunConfig:
    """Flags that were given override the file, which overrides the defaults."""
    values = load_config_file(config_file) if config_file is not None else {}
    values.update({key: value for key, value in flags.items() if value is not None})
    return RunConfig(**values)
