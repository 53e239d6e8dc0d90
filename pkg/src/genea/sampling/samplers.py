"""Exact samplers of ancestral processes.

``sample_full_ancestral`` draws the whole population's genealogy truncated at
a depth eps. The other samplers draw the genealogy of n individuals picked
uniformly in the extant population: static (all depths at once), dynamic-V
and dynamic-H (one individual at a time, nested in n) and conditional on
the height of the whole population's tree.
"""

import bisect
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from genea.core.distributions import (
    c_theta,
    c_theta_inv,
    sample_zeta_star,
    sample_zeta_star_conditioned,
)
from genea.core.params import BranchingParams, RngStream
from genea.exceptions import InterlacingError, ParameterError, SamplerInvariantError
from genea.logging import logger
from genea.sampling.frame import (
    DynamicTrace,
    SampleFrame,
    StepCase,
    StepRecord,
    draw_positions,
    sample_boundaries,
    sample_frame,
    static_intervals,
    static_lengths,
)
from genea.tree.ancestral import AncestralProcess

FloatArray = NDArray[np.float64]


def _require_n(n: int) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    return int(n)


def _require_positive(value: float, name: str) -> float:
    if not (math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be finite and > 0, got {value}")
    return float(value)


# Full process


def _boundaries(
    params: BranchingParams,
    rng: RngStream,
    boundaries: tuple[float, float] | None,
) -> tuple[float, float]:
    if boundaries is None:
        return sample_boundaries(params, rng)
    e_g, e_d = (_require_positive(b, "boundary") for b in boundaries)
    return e_g, e_d


def _truncated_depths(
    params: BranchingParams, eps: float, count: int, rng: RngStream
) -> FloatArray:
    tail = float(c_theta(params, eps))
    zetas = np.asarray(c_theta_inv(params, tail * rng.uniform_open(count)))
    # rounding near U = 1 must not put an atom at or below the truncation
    return np.maximum(zetas, np.nextafter(eps, math.inf))


def sample_full_arrays(
    params: BranchingParams,
    eps: float,
    rng: RngStream,
    boundaries: tuple[float, float] | None = None,
) -> tuple[FloatArray, FloatArray, float, float]:
    """Positions, depths and boundaries of the full process above depth ``eps``.

    Given (e_g, e_d) the atoms form a Poisson process of intensity
    du |c'(zeta)| dzeta on (-e_g, e_d) x (eps, inf): their number is Poisson
    with mean Z0 c(eps) and each depth is c^-1(U c(eps)).
    """
    params.require_finite_population("sample_full_ancestral")
    eps = _require_positive(eps, "eps_trunc")
    e_g, e_d = _boundaries(params, rng, boundaries)
    count = rng.poisson((e_g + e_d) * float(c_theta(params, eps)))
    us, _ = draw_positions(e_g, e_d, count, rng)
    return us, _truncated_depths(params, eps, count, rng), e_g, e_d


def sample_full_depths(
    params: BranchingParams,
    eps: float,
    rng: RngStream,
    boundaries: tuple[float, float] | None = None,
) -> tuple[FloatArray, float, float]:
    """Depths and boundaries of the full process, positions left undrawn.

    Enough for the length functionals, which ignore positions.
    """
    params.require_finite_population("sample_full_depths")
    eps = _require_positive(eps, "eps_trunc")
    e_g, e_d = _boundaries(params, rng, boundaries)
    count = rng.poisson((e_g + e_d) * float(c_theta(params, eps)))
    return _truncated_depths(params, eps, count, rng), e_g, e_d


def sample_full_ancestral(
    params: BranchingParams,
    eps_trunc: float,
    rng: RngStream,
    boundaries: tuple[float, float] | None = None,
) -> AncestralProcess:
    """Ancestral process of the whole extant population: atoms with zeta > eps_trunc."""
    us, zetas, e_g, e_d = sample_full_arrays(params, eps_trunc, rng, boundaries)
    return AncestralProcess.from_arrays(us, zetas, e_g, e_d)


def _uniform_inside(
    lower: FloatArray, upper: FloatArray, rng: RngStream
) -> tuple[FloatArray, int]:
    """Uniform draws in the open intervals (lower, upper), avoiding 0."""
    width = upper - lower
    values = lower + width * rng.uniform_open(len(lower))
    redrawn = 0
    while True:
        bad = (values <= lower) | (values >= upper) | (values == 0)
        count = int(bad.sum())
        if not count:
            return values, redrawn
        redrawn += count
        values[bad] = lower[bad] + width[bad] * rng.uniform_open(count)


def _cells(frame: SampleFrame, us: FloatArray) -> NDArray[np.intp]:
    """Index k of the static interval I_k holding each position, -1 for none."""
    xs = frame.positions
    order = np.argsort(xs)
    ordered = xs[order]
    cells = np.full(us.shape, -1, dtype=np.intp)
    if not len(xs):
        return cells
    right = np.searchsorted(ordered, us, side="left")
    left = np.searchsorted(ordered, us, side="right") - 1
    positive = (us > 0) & (right < len(xs))
    negative = (us < 0) & (left >= 0)
    cells[positive] = order[right[positive]]
    cells[negative] = order[left[negative]]
    return cells


def subsample_arrays(
    params: BranchingParams,
    us: FloatArray,
    zetas: FloatArray,
    frame: SampleFrame,
    eps: float,
    rng: RngStream,
) -> tuple[FloatArray, FloatArray]:
    """Atom positions and depths of the sample's genealogy read off a full process.

    The sampled individual X_k carries the deepest atom of its interval I_k,
    placed where that atom is. An interval without atoms above ``eps`` gets
    an exact draw of zeta*_|I_k| conditioned below eps, at a uniform position.
    """
    n = frame.n
    cells = _cells(frame, us)
    inside = cells >= 0
    depths = np.full(n, -math.inf)
    np.maximum.at(depths, cells[inside], zetas[inside])
    positions = np.full(n, math.nan)
    winners = inside & (zetas == depths[np.where(inside, cells, 0)])
    positions[cells[winners]] = us[winners]
    empty = np.isneginf(depths)
    if empty.any():
        lower, upper = static_intervals(frame)
        lower, upper = lower[empty], upper[empty]
        depths[empty] = sample_zeta_star_conditioned(params, upper - lower, eps, rng)
        positions[empty], _ = _uniform_inside(lower, upper, rng)
    return positions, depths


def subsample_ancestral(
    params: BranchingParams,
    full: AncestralProcess,
    frame: SampleFrame,
    eps: float,
    rng: RngStream,
) -> AncestralProcess:
    """Genealogy of the frame's sample read off a full process truncated at eps."""
    if (full.e_g, full.e_d) != (frame.e_g, frame.e_d):
        raise ParameterError("frame and full process must share their boundaries")
    positions, depths = subsample_arrays(
        params, full.positions, full.depths, frame, eps, rng
    )
    return AncestralProcess.from_arrays(positions, depths, frame.e_g, frame.e_d)


# Static samplers


def static_depths(
    params: BranchingParams, frame: SampleFrame, rng: RngStream
) -> FloatArray:
    """Independent depths zeta*_|I_k|, one per sampled position."""
    return np.asarray(sample_zeta_star(params, static_lengths(frame), rng))


def _static_process(
    params: BranchingParams, frame: SampleFrame, rng: RngStream
) -> AncestralProcess:
    zetas = static_depths(params, frame, rng)
    return AncestralProcess.from_arrays(frame.xs, zetas, frame.e_g, frame.e_d)


def sample_static(
    params: BranchingParams, n: int, rng: RngStream
) -> tuple[SampleFrame, AncestralProcess]:
    params.require_finite_population("sample_static")
    n = _require_n(n)
    e_g, e_d = sample_boundaries(params, rng)
    frame = sample_frame(e_g, e_d, n, rng)
    return frame, _static_process(params, frame, rng)


def conditional_z0_frame(
    z0: float, n: int, rng: RngStream, split: float = 0.5
) -> SampleFrame:
    """Frame with e_g = split * z0 and e_d = z0 - e_g."""
    z0 = _require_positive(z0, "z0")
    if not 0 < split < 1:
        raise ParameterError(f"split must lie in (0, 1), got {split}")
    e_g = split * z0
    return sample_frame(e_g, z0 - e_g, _require_n(n), rng)


def sample_static_conditional_z0(
    params: BranchingParams,
    n: int,
    z0: float,
    rng: RngStream,
    split: float = 0.5,
) -> tuple[SampleFrame, AncestralProcess]:
    """Static sampler given the population size Z0 = z0.

    Given Z0 the law of the tree does not depend on how z0 splits into
    (e_g, e_d); the symmetric split is the default.
    """
    params.require_finite_population("sample_static_conditional_z0")
    frame = conditional_z0_frame(z0, n, rng, split)
    return frame, _static_process(params, frame, rng)


# Dynamic samplers


@dataclass(frozen=True)
class DynamicRun:
    """The nested sequence built by a dynamic sampler.

    Atom k is inserted at step k at ``positions[k]``; depths of earlier
    atoms change only through the records' ``kappa_height``.
    """

    frame: SampleFrame
    positions: tuple[float, ...]
    trace: DynamicTrace
    resampled: int = 0

    @property
    def n(self) -> int:
        return len(self.positions)

    def depths_at(self, step: int) -> FloatArray:
        if not 1 <= step <= self.n:
            raise ParameterError(f"step must lie in 1..{self.n}, got {step}")
        depths = np.empty(step)
        for k, record in enumerate(self.trace.records[:step]):
            depths[k] = record.height
            if record.kappa_height is not None:
                depths[record.kappa] = record.kappa_height
        return depths

    def process(self, step: int) -> AncestralProcess:
        return AncestralProcess.from_arrays(
            self.positions[:step], self.depths_at(step), self.frame.e_g, self.frame.e_d
        )

    @property
    def sequence(self) -> list[AncestralProcess]:
        return [self.process(step) for step in range(1, self.n + 1)]

    @property
    def final(self) -> AncestralProcess:
        return self.process(self.n)


def _neighbours(
    x_sorted: list[float], x: float, frame: SampleFrame
) -> tuple[int, float, float]:
    j = bisect.bisect_left(x_sorted, x)
    left = x_sorted[j - 1] if j > 0 else -frame.e_g
    right = x_sorted[j] if j < len(x_sorted) else frame.e_d
    return j, left, right


def _check_interlacing(step: int, x_sorted: list[float], v_sorted: list[float]) -> None:
    merged = np.empty(2 * len(x_sorted) - 1)
    merged[0::2] = x_sorted
    merged[1::2] = v_sorted
    if not np.all(np.diff(merged) > 0):
        raise InterlacingError(step, list(x_sorted), list(v_sorted))


def _uniform_point(lo: float, hi: float, rng: RngStream) -> tuple[float, int]:
    values, redrawn = _uniform_inside(np.array([lo]), np.array([hi]), rng)
    return float(values[0]), redrawn


def _draw_height(
    params: BranchingParams, delta: float, hmax: float | None, rng: RngStream
) -> float:
    if hmax is None:
        return float(sample_zeta_star(params, delta, rng))
    return float(sample_zeta_star_conditioned(params, delta, hmax, rng))


def _dynamic_frame(params: BranchingParams, n: int, rng: RngStream) -> SampleFrame:
    n = _require_n(n)
    e_g, e_d = sample_boundaries(params, rng)
    return sample_frame(e_g, e_d, n, rng)


def sample_dynamic_v(params: BranchingParams, n: int, rng: RngStream) -> DynamicRun:
    """Dynamic sampler with auxiliary positions V_k.

    Atom k sits at V_k, uniform in the interval I_k chosen at step k. At
    every step the V's interlace the sorted X's (0 included). An interior
    step conditions the new depth below that of the atom whose V lies in
    the gap the new X fell into.
    """
    params.require_finite_population("sample_dynamic_v")
    frame = _dynamic_frame(params, n, rng)
    x_sorted: list[float] = [0.0]
    v_sorted: list[float] = []
    owner: dict[float, int] = {}
    positions: list[float] = []
    heights: list[float] = []
    records: list[StepRecord] = []
    resampled = frame.resampled

    for step, x in enumerate(frame.xs, start=1):
        j, left, right = _neighbours(x_sorted, x, frame)
        kappa: int | None = None
        hmax: float | None = None
        if j == len(x_sorted):
            case, side = StepCase.BOUNDARY, "g"
        elif j == 0:
            case, side = StepCase.BOUNDARY, "d"
        else:
            case = StepCase.INTERIOR
            vi = bisect.bisect_left(v_sorted, left)
            if vi == len(v_sorted) or v_sorted[vi] > right:
                raise InterlacingError(step, list(x_sorted), list(v_sorted))
            v_kappa = v_sorted[vi]
            kappa = owner[v_kappa]
            hmax = heights[kappa]
            side = "g" if x < v_kappa else "d"
        lo, hi = (left, x) if side == "g" else (x, right)
        v, redrawn = _uniform_point(lo, hi, rng)
        resampled += redrawn
        height = _draw_height(params, hi - lo, hmax, rng)

        bisect.insort(x_sorted, x)
        bisect.insort(v_sorted, v)
        owner[v] = step - 1
        positions.append(v)
        heights.append(height)
        records.append(
            StepRecord(
                step=step,
                case=case,
                side=side,
                x=x,
                delta=hi - lo,
                height=height,
                position=v,
                hmax=hmax,
                kappa=kappa,
            )
        )
        _check_interlacing(step, x_sorted, v_sorted)

    if resampled:
        logger.debug("Dynamic-V redraws", extra={"resampled": resampled})
    return DynamicRun(frame, tuple(positions), DynamicTrace(tuple(records)), resampled)


def sample_dynamic_h(params: BranchingParams, n: int, rng: RngStream) -> DynamicRun:
    """Dynamic sampler with atoms at the X_k and height swaps.

    An interior step involves the neighbour kappa away from the spine: with
    probability p_keep kappa keeps its height H and the new atom draws a
    height below H, otherwise the new atom takes H and kappa redraws below H.
    """
    params.require_finite_population("sample_dynamic_h")
    frame = _dynamic_frame(params, n, rng)
    x_sorted: list[float] = [0.0]
    owner: dict[float, int] = {}
    heights: list[float] = []
    records: list[StepRecord] = []

    for step, x in enumerate(frame.xs, start=1):
        j, left, right = _neighbours(x_sorted, x, frame)
        if left < 0 < right:
            raise SamplerInvariantError(
                f"step {step}: neighbours {left} and {right} straddle the spine"
            )
        len_g, len_d = x - left, right - x
        if j == len(x_sorted) or j == 0:
            side = "g" if j == len(x_sorted) else "d"
            delta = len_g if side == "g" else len_d
            height = _draw_height(params, delta, None, rng)
            record = StepRecord(
                step=step,
                case=StepCase.BOUNDARY,
                side=side,
                x=x,
                delta=delta,
                height=height,
                position=x,
            )
        else:
            # kappa is the neighbour on the far side from the spine
            if left >= 0:
                side, kappa_x = "d", right
                p_keep = len_d / (len_d + len_g)
                near, far = len_g, len_d
            else:
                side, kappa_x = "g", left
                p_keep = len_g / (len_d + len_g)
                near, far = len_d, len_g
            kappa = owner[kappa_x]
            h = heights[kappa]
            kept = rng.bernoulli(p_keep)
            if kept:
                delta = near
                height = _draw_height(params, near, h, rng)
                kappa_height = h
            else:
                delta = far
                height = h
                kappa_height = _draw_height(params, far, h, rng)
                heights[kappa] = kappa_height
            record = StepRecord(
                step=step,
                case=StepCase.INTERIOR,
                side=side,
                x=x,
                delta=delta,
                height=height,
                position=x,
                hmax=h,
                kappa=kappa,
                kept=kept,
                p_keep=p_keep,
                kappa_height=kappa_height,
            )
        bisect.insort(x_sorted, x)
        owner[x] = step - 1
        heights.append(record.height)
        records.append(record)

    return DynamicRun(frame, frame.xs, DynamicTrace(tuple(records)), frame.resampled)


# Conditional on the height of the population's tree


def sample_conditional_tmrca(
    params: BranchingParams, n: int, h: float, rng: RngStream
) -> tuple[SampleFrame, AncestralProcess]:
    """Genealogy of n individuals given that the whole population's tree has height h.

    The deepest lineage sits at X with e_g + X_-, |X| and e_d - X_+ i.i.d.
    exponential of rate 2 theta + c(h) and a fair sign. The sampled
    individual whose interval holds X gets depth h, the others draws of
    zeta*_|I_k| conditioned below h.
    """
    params.require_finite_population("sample_conditional_tmrca")
    n = _require_n(n)
    h = _require_positive(h, "h")
    rate = 2.0 * params.theta + float(c_theta(params, h))
    e1, e2, e3 = (float(e) for e in rng.exponential(rate, 3))
    if rng.bernoulli(0.5):
        e_g, x, e_d = e1 + e2, -e2, e3
    else:
        e_g, x, e_d = e1, e2, e2 + e3
    frame = sample_frame(e_g, e_d, n, rng, forced=x)
    lower, upper = static_intervals(frame)
    zetas = np.asarray(sample_zeta_star_conditioned(params, upper - lower, h, rng))
    zetas[(lower <= x) & (x <= upper)] = h
    return frame, AncestralProcess.from_arrays(frame.xs, zetas, e_g, e_d)
