"""Sampling frames: boundaries of the extant population and sampled positions."""

import math
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from numpy.typing import NDArray

from genea.core.params import BranchingParams, RngStream
from genea.exceptions import ParameterError
from genea.logging import logger


@dataclass(frozen=True)
class SampleFrame:
    """Boundaries (e_g, e_d) and the sampled positions X_1..X_n in draw order.

    The population occupies (-e_g, e_d); position 0 is the spine. ``forced``
    is the position of the deepest lineage when the frame was drawn
    conditionally on the tree height, else None.
    """

    e_g: float
    e_d: float
    xs: tuple[float, ...]
    resampled: int = 0
    forced: float | None = None
    _points: NDArray[np.float64] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for name in ("e_g", "e_d"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {value}")
        xs = np.asarray(self.xs, dtype=np.float64)
        if np.any(xs == 0) or np.any(xs <= -self.e_g) or np.any(xs >= self.e_d):
            raise ParameterError(
                "sampled positions must be nonzero and inside (-e_g, e_d)"
            )
        points = np.sort(np.concatenate([[-self.e_g, 0.0, self.e_d], xs]))
        if np.any(np.diff(points) == 0):
            raise ParameterError("sampled positions must be distinct")
        object.__setattr__(self, "xs", tuple(float(x) for x in xs))
        object.__setattr__(self, "_points", points)

    @property
    def z0(self) -> float:
        return self.e_g + self.e_d

    @property
    def n(self) -> int:
        return len(self.xs)

    @property
    def positions(self) -> NDArray[np.float64]:
        return np.asarray(self.xs, dtype=np.float64)


def sample_boundaries(params: BranchingParams, rng: RngStream) -> tuple[float, float]:
    """(e_g, e_d): two independent exponentials of rate 2 theta."""
    params.require_finite_population("sample_boundaries")
    rate = 2.0 * params.theta
    return float(rng.exponential(rate)), float(rng.exponential(rate))


def _duplicated(values: NDArray[np.float64]) -> NDArray[np.bool_]:
    """Mask of entries equal to an earlier entry."""
    order = np.argsort(values, kind="stable")
    ties = values[order][1:] == values[order][:-1]
    mask = np.zeros(values.shape, dtype=bool)
    mask[order[1:][ties]] = True
    return mask


def draw_positions(
    e_g: float, e_d: float, n: int, rng: RngStream
) -> tuple[NDArray[np.float64], int]:
    """X_k = Z0 U_k - e_g for k = 1..n, redrawing zeros, collisions and boundary hits.

    Returns the positions and the number of redrawn values.
    """
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    z0 = e_g + e_d
    xs = z0 * rng.uniform_open(n) - e_g
    resampled = 0
    while True:
        bad = (xs == 0) | (xs <= -e_g) | (xs >= e_d) | _duplicated(xs)
        count = int(bad.sum())
        if not count:
            break
        resampled += count
        xs[bad] = z0 * rng.uniform_open(count) - e_g
    if resampled:
        logger.debug("Redrew sampled positions", extra={"resampled": resampled})
    return xs, resampled


def sample_frame(
    e_g: float, e_d: float, n: int, rng: RngStream, forced: float | None = None
) -> SampleFrame:
    xs, resampled = draw_positions(e_g, e_d, n, rng)
    return SampleFrame(e_g, e_d, tuple(xs.tolist()), resampled, forced)


def static_intervals(
    frame: SampleFrame,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Intervals I^S_k as (lower, upper) arrays aligned with ``frame.xs``.

    For X_k > 0 the interval runs from the nearest frame point on its left
    up to X_k; for X_k < 0 from X_k up to the nearest point on its right.
    Frame points are -e_g, 0, e_d and every X_j.
    """
    xs = frame.positions
    points = frame._points
    idx = np.searchsorted(points, xs)
    positive = xs > 0
    lower = np.where(positive, points[idx - 1], xs)
    upper = np.where(positive, xs, points[idx + 1])
    return lower, upper


def static_lengths(frame: SampleFrame) -> NDArray[np.float64]:
    lower, upper = static_intervals(frame)
    return upper - lower


class StepCase(StrEnum):
    BOUNDARY = "boundary"
    INTERIOR = "interior"


@dataclass(frozen=True, slots=True)
class StepRecord:
    """One insertion of a dynamic sampler.

    ``side`` names the interval used for the new depth ("g" left of X_n,
    "d" right of it) or, for interior steps of the height-swapping sampler,
    the side of the neighbour kappa. ``kappa`` is an insertion index
    (0-based) and ``kept`` tells whether kappa kept its height.
    """

    step: int
    case: StepCase
    side: str
    x: float
    delta: float
    height: float
    position: float
    hmax: float | None = None
    kappa: int | None = None
    kept: bool | None = None
    p_keep: float | None = None
    kappa_height: float | None = None


@dataclass(frozen=True)
class DynamicTrace:
    records: tuple[StepRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def interior(self) -> tuple[StepRecord, ...]:
        return tuple(r for r in self.records if r.case is StepCase.INTERIOR)
