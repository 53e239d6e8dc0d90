"""Finite ancestral processes and the tree metric they encode.

An ancestral process is a finite set of atoms (u, zeta): u is a position on
the local-time axis of the extant population and zeta the depth at which the
lineage born at u merges into an older one. Together with the spine (the
immortal lineage, at position 0 and of infinite depth) the atoms define a
rooted real tree whose leaves are the atoms' tips plus the spine's tip.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum, StrEnum
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from genea.exceptions import ParameterError, TreeIndexError


class Spine(Enum):
    """Marker for the spine segment, which never carries a numeric depth."""

    SPINE = "spine"

    def __repr__(self) -> str:
        return "SPINE"


SPINE = Spine.SPINE
Segment = int | Spine


@dataclass(frozen=True, slots=True)
class Atom:
    u: float
    zeta: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.u) or self.u == 0:
            raise ParameterError(f"atom position must be finite and != 0, got {self.u}")
        if not (math.isfinite(self.zeta) and self.zeta > 0):
            raise ParameterError(f"atom depth must be finite and > 0, got {self.zeta}")


@dataclass(frozen=True, slots=True)
class TreePoint:
    """A point of the tree: a segment and the distance below its tip."""

    segment: Segment
    depth: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.depth) and self.depth >= 0):
            raise ParameterError(f"tree point depth must be >= 0, got {self.depth}")


class ViolationKind(StrEnum):
    DUPLICATE_POSITION = "duplicate-position"
    OUTSIDE_SUPPORT = "outside-support"


@dataclass(frozen=True, slots=True)
class Violation:
    kind: ViolationKind
    message: str
    index: int


@dataclass(frozen=True)
class AncestralProcess:
    """Atoms sorted by position, with the support boundaries (e_g, e_d).

    The support is the open interval (-e_g, e_d); either boundary may be
    infinite. Instances are immutable and safe to share between threads.
    """

    atoms: tuple[Atom, ...] = ()
    e_g: float = math.inf
    e_d: float = math.inf

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple(sorted(self.atoms, key=_position)))
        for name in ("e_g", "e_d"):
            value = getattr(self, name)
            if not value > 0:
                raise ParameterError(f"{name} must be > 0 or +inf, got {value}")

    @classmethod
    def from_arrays(
        cls,
        us: Iterable[float],
        zetas: Iterable[float],
        e_g: float = math.inf,
        e_d: float = math.inf,
    ) -> "AncestralProcess":
        atoms = tuple(Atom(float(u), float(z)) for u, z in zip(us, zetas, strict=True))
        return cls(atoms, float(e_g), float(e_d))

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def z0(self) -> float:
        """Extant population size e_g + e_d."""
        return self.e_g + self.e_d

    @cached_property
    def positions(self) -> NDArray[np.float64]:
        values = np.array([a.u for a in self.atoms], dtype=np.float64)
        values.setflags(write=False)
        return values

    @cached_property
    def depths(self) -> NDArray[np.float64]:
        values = np.array([a.zeta for a in self.atoms], dtype=np.float64)
        values.setflags(write=False)
        return values

    @cached_property
    def spine_index(self) -> int:
        """Atoms left of the spine: the spine's slot in position order."""
        return int(np.searchsorted(self.positions, 0.0))


def _position(atom: Atom) -> float:
    return atom.u


def validate(ap: AncestralProcess) -> Violation | None:
    """Return the first violated invariant in position order, or None.

    Local finiteness holds for every finite atom list, so only distinct
    positions and the support condition are checked.
    """
    previous: float | None = None
    for index, atom in enumerate(ap.atoms):
        if not -ap.e_g < atom.u < ap.e_d:
            return Violation(
                ViolationKind.OUTSIDE_SUPPORT,
                f"atom {index} at u={atom.u} lies outside ({-ap.e_g}, {ap.e_d})",
                index,
            )
        if previous is not None and atom.u == previous:
            return Violation(
                ViolationKind.DUPLICATE_POSITION,
                f"atoms {index - 1} and {index} share position u={atom.u}",
                index,
            )
        previous = atom.u
    return None


def _check_segment(ap: AncestralProcess, segment: Segment) -> None:
    if segment is SPINE:
        return
    if isinstance(segment, bool) or not isinstance(segment, (int, np.integer)):
        raise TreeIndexError(f"segment must be an atom index or SPINE, got {segment!r}")
    if not 0 <= segment < len(ap):
        raise TreeIndexError(f"atom index {segment} out of range for {len(ap)} atoms")


def check_point(ap: AncestralProcess, point: TreePoint) -> None:
    """Raise TreeIndexError unless ``point`` addresses a point of the tree."""
    _check_segment(ap, point.segment)
    if point.segment is not SPINE and point.depth >= ap.depths[point.segment]:
        raise TreeIndexError(
            f"depth {point.depth} is not above the base of atom {point.segment} "
            f"(zeta={ap.depths[point.segment]})"
        )


def segment_position(ap: AncestralProcess, segment: Segment) -> float:
    _check_segment(ap, segment)
    return 0.0 if segment is SPINE else float(ap.positions[segment])


def leaf_distance(ap: AncestralProcess, i: Segment, j: Segment) -> float:
    """Distance between two leaves: twice the largest depth over J(x_i, x_j).

    J(x, y) is (x, y] when x >= 0, [x, y) when y <= 0 and [x, y] minus {0}
    otherwise; the spine never belongs to J and the maximum of nothing is 0.
    """
    x, y = sorted((segment_position(ap, i), segment_position(ap, j)))
    if x == y:
        return 0.0
    xs = ap.positions
    if x >= 0:
        lo = np.searchsorted(xs, x, side="right")
        hi = np.searchsorted(xs, y, side="right")
    elif y <= 0:
        lo = np.searchsorted(xs, x, side="left")
        hi = np.searchsorted(xs, y, side="left")
    else:
        lo = np.searchsorted(xs, x, side="left")
        hi = np.searchsorted(xs, y, side="right")
    if hi <= lo:
        return 0.0
    return 2.0 * float(ap.depths[lo:hi].max())


def point_distance(ap: AncestralProcess, p: TreePoint, q: TreePoint) -> float:
    """Distance between two tree points, depths read as magnitudes.

    With r half the leaf distance of the two segments and m = max(r, a, b),
    the path climbs from each point to depth m: (m - a) + (m - b).
    """
    check_point(ap, p)
    check_point(ap, q)
    if p.segment == q.segment:
        return abs(p.depth - q.depth)
    r = leaf_distance(ap, p.segment, q.segment) / 2.0
    m = max(r, p.depth, q.depth)
    return (m - p.depth) + (m - q.depth)


def attach_index(ap: AncestralProcess, i: int) -> Segment:
    """The lineage atom ``i`` merges into.

    For u_i > 0 this is the atom of largest position in [0, u_i) that is
    deeper than atom ``i``; mirrored for u_i < 0. SPINE when there is none.
    """
    if i is SPINE:
        raise TreeIndexError("the spine has no attachment")
    _check_segment(ap, i)
    xs, zs = ap.positions, ap.depths
    zeta = zs[i]
    step = -1 if xs[i] > 0 else 1
    k = i + step
    while 0 <= k < len(ap) and (xs[k] > 0) == (xs[i] > 0):
        if zs[k] > zeta:
            return k
        k += step
    return SPINE


def tmrca(ap: AncestralProcess) -> float:
    """Depth of the most recent common ancestor: the largest atom depth."""
    return float(ap.depths.max()) if len(ap) else 0.0


def ancestor_count(ap: AncestralProcess, s: float) -> int:
    """Number of lineages, the spine excluded, alive at depth ``s`` (zeta > s)."""
    if not s > 0:
        raise ParameterError(f"s must be > 0, got {s}")
    return int(np.count_nonzero(ap.depths > s))


def total_length(ap: AncestralProcess) -> float:
    return math.fsum(ap.depths)


def truncated_length(ap: AncestralProcess, eps: float) -> float:
    """Length of the tree above depth ``eps``: sum of (zeta - eps)_+."""
    if not eps >= 0:
        raise ParameterError(f"eps must be >= 0, got {eps}")
    return math.fsum(np.maximum(ap.depths - eps, 0.0))


def spine_distances(ap: AncestralProcess) -> NDArray[np.float64]:
    """Leaf distance from the spine tip to every atom tip, in position order."""
    zs = ap.depths
    k = ap.spine_index
    out = np.empty_like(zs)
    out[k:] = np.maximum.accumulate(zs[k:])
    out[:k] = np.maximum.accumulate(zs[:k][::-1])[::-1]
    return 2.0 * out


def leaf_distance_matrix(ap: AncestralProcess) -> NDArray[np.float64]:
    """Pairwise leaf distances; row/column 0 is the spine, then atoms by position."""
    leaves: Sequence[Segment] = [SPINE, *range(len(ap))]
    size = len(leaves)
    matrix = np.zeros((size, size))
    for a in range(size):
        for b in range(a + 1, size):
            matrix[a, b] = matrix[b, a] = leaf_distance(ap, leaves[a], leaves[b])
    return matrix
