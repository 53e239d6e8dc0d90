"""Model parameters and reproducible random streams."""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from genea.exceptions import DegenerateThetaError, ParameterError

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True, slots=True)
class BranchingParams:
    """The pair (beta, theta) of psi(l) = beta l^2 + 2 beta theta l.

    beta is a rate (1/time), theta an inverse population size.
    """

    beta: float
    theta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ParameterError(
                f"beta must be a positive finite real, got {self.beta}"
            )
        if not (math.isfinite(self.theta) and self.theta >= 0):
            raise ParameterError(
                f"theta must be a nonnegative finite real, got {self.theta}"
            )

    def require_finite_population(self, operation: str) -> None:
        """Reject theta = 0 for operations that need a finite extant population."""
        if self.theta == 0:
            raise DegenerateThetaError(operation)

    def as_dict(self) -> dict[str, float]:
        return {"beta": self.beta, "theta": self.theta}


def _check_seed(value: int, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ParameterError(f"{what} must be an integer, got {value!r}")
    if not 0 <= int(value) <= _UINT64_MAX:
        raise ParameterError(f"{what} must fit in an unsigned 64-bit integer")
    return int(value)


@dataclass
class RngStream:
    """A PCG64 stream addressed by (seed, stream_id).

    The generator is seeded from ``SeedSequence(entropy=seed, spawn_key=path)``;
    distinct spawn keys give statistically independent streams and equal keys
    give bit-identical sequences. A stream must be used by one thread at a time.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()
    resampled: int = field(default=0, init=False, compare=False)
    _generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.seed = _check_seed(self.seed, "seed")
        self.stream_id = _check_seed(self.stream_id, "stream_id")
        sequence = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id, *self.path)
        )
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def child(self, index: int) -> "RngStream":
        """Independent sub-stream, e.g. one per Monte Carlo replicate."""
        return RngStream(
            self.seed, self.stream_id, (*self.path, _check_seed(index, "index"))
        )

    def uniform_open(self, size: int | None = None) -> float | NDArray[np.float64]:
        """Uniform draws on the open interval (0, 1).

        ``Generator.random`` samples [0, 1); zeros are redrawn because the
        inverse transforms take log U.
        """
        if size is None:
            u = self._generator.random()
            while u == 0.0:
                self.resampled += 1
                u = self._generator.random()
            return u
        values = self._generator.random(size)
        zeros = values == 0.0
        while zeros.any():
            self.resampled += int(zeros.sum())
            values[zeros] = self._generator.random(int(zeros.sum()))
            zeros = values == 0.0
        return values

    def uniform(
        self, low: float, high: float, size: int | None = None
    ) -> float | NDArray[np.float64]:
        return low + (high - low) * self.uniform_open(size)

    def exponential(
        self, rate: float, size: int | None = None
    ) -> float | NDArray[np.float64]:
        if rate <= 0:
            raise ParameterError(f"exponential rate must be positive, got {rate}")
        return self._generator.exponential(1.0 / rate, size)

    def poisson(self, mean: float) -> int:
        if mean < 0 or not math.isfinite(mean):
            raise ParameterError(f"Poisson mean must be finite and >= 0, got {mean}")
        return int(self._generator.poisson(mean))

    def bernoulli(self, p: float) -> bool:
        return bool(self._generator.random() < p)
