"""Piecewise-affine contour of a finite ancestral process.

The contour takes the value -zeta_i at x_i and 0 at one peak per leaf: the
midpoints between consecutive atoms (0 itself for the gap that straddles the
spine), x_1 - 1 and x_n + 1. Beyond the two end peaks it descends with slope
1 to a floor below every depth of interest, which carries the spine.

Distances are d_g(s, t) = g(s) + g(t) - 2 min over [s, t] of g. This is an
independent computation of the tree metric, used to check ``point_distance``.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from genea.tree.ancestral import (
    SPINE,
    AncestralProcess,
    TreePoint,
    check_point,
    tmrca,
)


@dataclass(frozen=True, slots=True)
class Contour:
    """Knots of the contour, left to right.

    Left floor, peak_0, x_1, peak_1, ..., x_n, peak_n, right floor.

    Atom i (0-based) sits at knot 2i + 2 and peak j at knot 2j + 1, so edge
    e joins knots e and e + 1.
    """

    knot_x: NDArray[np.float64]
    knot_level: NDArray[np.float64]
    spine_peak: int


@dataclass(frozen=True, slots=True)
class ContourLocation:
    edge: int
    level: float


def build_contour(ap: AncestralProcess, floor: float) -> Contour:
    """Contour of ``ap`` with tails down to ``-floor``, which lies below every depth."""
    xs = ap.positions
    n = len(xs)
    if n:
        peaks = np.empty(n + 1)
        peaks[0] = xs[0] - 1.0
        peaks[-1] = xs[-1] + 1.0
        peaks[1:-1] = (xs[:-1] + xs[1:]) / 2.0
        straddle = (xs[:-1] < 0) & (xs[1:] > 0)
        peaks[1:-1][straddle] = 0.0
    else:
        peaks = np.zeros(1)

    knot_x = np.empty(2 * n + 3)
    knot_level = np.empty(2 * n + 3)
    knot_x[1::2] = peaks
    knot_level[1::2] = 0.0
    knot_x[2:-1:2] = xs
    knot_level[2:-1:2] = -ap.depths
    knot_x[0] = peaks[0] - floor
    knot_x[-1] = peaks[-1] + floor
    knot_level[0] = knot_level[-1] = -floor
    return Contour(knot_x, knot_level, spine_peak=2 * ap.spine_index + 1)


def locate(ap: AncestralProcess, contour: Contour, point: TreePoint) -> ContourLocation:
    """Edge of the contour holding ``point`` and the contour value there."""
    level = -point.depth
    if point.segment is SPINE:
        # first time the contour reaches the level, walking left from the spine's peak
        k = contour.spine_peak - 1
        while contour.knot_level[k] > level:
            k -= 1
        return ContourLocation(k, level)
    i = int(point.segment)
    knot = 2 * i + 2
    if ap.positions[i] > 0:
        return ContourLocation(knot, level)
    return ContourLocation(knot - 1, level)


def contour_distance(ap: AncestralProcess, p: TreePoint, q: TreePoint) -> float:
    check_point(ap, p)
    check_point(ap, q)
    floor = 2.0 + max(tmrca(ap), p.depth, q.depth)
    contour = build_contour(ap, floor)
    first, second = sorted(
        (locate(ap, contour, p), locate(ap, contour, q)), key=lambda loc: loc.edge
    )
    lowest = min(first.level, second.level)
    if second.edge > first.edge:
        between = contour.knot_level[first.edge + 1 : second.edge + 1]
        lowest = min(lowest, float(between.min()))
    return (first.level - lowest) + (second.level - lowest)
