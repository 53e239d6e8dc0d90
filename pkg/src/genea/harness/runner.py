"""Replicate runner with ordered, thread-count independent results."""

import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np

from genea.core.params import RngStream
from genea.exceptions import ParameterError
from genea.logging import logger

T = TypeVar("T")


def run_replicates(
    task: Callable[[RngStream], T],
    reps: int,
    rng: RngStream,
    threads: int = 1,
) -> list[T]:
    """Run ``task`` on ``rng.child(r)`` for r = 0..reps-1 and return results in r order.

    Each replicate owns its stream, so the results do not depend on
    ``threads``.
    """
    if reps < 1:
        raise ParameterError(f"reps must be >= 1, got {reps}")
    if threads < 1:
        raise ParameterError(f"threads must be >= 1, got {threads}")
    streams = (rng.child(r) for r in range(reps))
    if threads == 1:
        return [task(stream) for stream in streams]
    logger.debug("Running replicates", extra={"reps": reps, "threads": threads})
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, streams))


def mean_and_se(values: Sequence[float] | Iterable[float]) -> tuple[float, float]:
    """Sample mean (exactly rounded sum) and its standard error."""
    data = np.asarray(list(values), dtype=np.float64)
    if data.size < 2:
        raise ParameterError("need at least two values for a standard error")
    mean = math.fsum(data) / data.size
    sd = math.sqrt(math.fsum((data - mean) ** 2) / (data.size - 1))
    return mean, sd / math.sqrt(data.size)
