"""Tests for ancestral processes and the tree metric."""

import math

import numpy as np
import pytest

from genea.core.params import RngStream
from genea.exceptions import ParameterError, TreeIndexError
from genea.harness.suites import random_process
from genea.tree.ancestral import (
    SPINE,
    AncestralProcess,
    Atom,
    TreePoint,
    ViolationKind,
    ancestor_count,
    attach_index,
    leaf_distance,
    leaf_distance_matrix,
    point_distance,
    spine_distances,
    tmrca,
    total_length,
    truncated_length,
    validate,
)


@pytest.fixture
def three_atoms():
    return AncestralProcess.from_arrays([3.0, 1.0, 4.0], [5.0, 2.0, 1.0])


@pytest.fixture
def both_sides():
    return AncestralProcess.from_arrays([2.0, -1.0], [1.0, 3.0])


def test_atoms_sorted_by_position(three_atoms):
    assert list(three_atoms.positions) == [1.0, 3.0, 4.0]
    assert list(three_atoms.depths) == [2.0, 5.0, 1.0]
    assert three_atoms.spine_index == 0
    assert len(three_atoms) == 3
    assert three_atoms.z0 == math.inf


def test_spine_index_counts_left_atoms(both_sides):
    assert both_sides.spine_index == 1
    assert list(both_sides.positions) == [-1.0, 2.0]


@pytest.mark.parametrize(
    "u,zeta",
    [(0.0, 1.0), (math.nan, 1.0), (1.0, 0.0), (1.0, -2.0), (1.0, math.inf)],
)
def test_atom_rejects_bad_values(u, zeta):
    with pytest.raises(ParameterError):
        Atom(u, zeta)


def test_process_rejects_nonpositive_boundary():
    with pytest.raises(ParameterError):
        AncestralProcess((Atom(0.5, 1.0),), e_g=0.0)


def test_validate_accepts_well_formed(three_atoms):
    assert validate(three_atoms) is None
    assert validate(AncestralProcess()) is None


def test_validate_reports_duplicate_position():
    ap = AncestralProcess.from_arrays([1.0, 1.0], [1.0, 2.0])
    violation = validate(ap)
    assert violation is not None
    assert violation.kind is ViolationKind.DUPLICATE_POSITION
    assert violation.index == 1


def test_validate_reports_atom_outside_support():
    ap = AncestralProcess.from_arrays([0.5, 3.0], [1.0, 1.0], e_g=1.0, e_d=2.0)
    violation = validate(ap)
    assert violation is not None
    assert violation.kind is ViolationKind.OUTSIDE_SUPPORT
    assert violation.index == 1


def test_leaf_distances(three_atoms):
    assert leaf_distance(three_atoms, SPINE, 0) == 4.0
    assert leaf_distance(three_atoms, 0, 1) == 10.0
    assert leaf_distance(three_atoms, SPINE, 1) == 10.0
    assert leaf_distance(three_atoms, 1, 2) == 2.0
    assert leaf_distance(three_atoms, 2, 0) == 10.0
    assert leaf_distance(three_atoms, 1, 1) == 0.0


def test_leaf_distances_across_spine(both_sides):
    assert leaf_distance(both_sides, 0, 1) == 6.0
    assert leaf_distance(both_sides, SPINE, 0) == 6.0
    assert leaf_distance(both_sides, SPINE, 1) == 2.0


def test_point_distance():
    ap = AncestralProcess.from_arrays([1.0, 3.0], [2.0, 5.0])
    assert point_distance(ap, TreePoint(0, 1.0), TreePoint(SPINE, 0.0)) == 3.0
    # same segment
    assert point_distance(ap, TreePoint(1, 0.5), TreePoint(1, 4.0)) == 3.5
    # points below the merge of their segments
    assert point_distance(ap, TreePoint(SPINE, 7.0), TreePoint(1, 1.0)) == 6.0


def test_point_distance_matches_leaf_distance(three_atoms):
    for i in (SPINE, 0, 1, 2):
        for j in (SPINE, 0, 1, 2):
            assert point_distance(
                three_atoms, TreePoint(i), TreePoint(j)
            ) == leaf_distance(three_atoms, i, j)


@pytest.mark.parametrize(
    "point",
    [TreePoint(0, 2.0), TreePoint(0, 3.5), TreePoint(5), TreePoint(-1)],
)
def test_point_outside_tree_raises(point):
    ap = AncestralProcess.from_arrays([1.0, 3.0], [2.0, 5.0])
    with pytest.raises(TreeIndexError):
        point_distance(ap, point, TreePoint(SPINE))


def test_tree_point_rejects_negative_depth():
    with pytest.raises(ParameterError):
        TreePoint(SPINE, -1.0)


def test_attach_index(three_atoms):
    assert attach_index(three_atoms, 2) == 1
    assert attach_index(three_atoms, 1) is SPINE
    assert attach_index(three_atoms, 0) is SPINE


def test_attach_index_left_of_spine():
    ap = AncestralProcess.from_arrays([-3.0, -2.0, -1.0], [4.0, 1.0, 2.0])
    assert attach_index(ap, 1) == 2
    assert attach_index(ap, 0) is SPINE


def test_attach_index_rejects_spine_and_range(three_atoms):
    with pytest.raises(TreeIndexError):
        attach_index(three_atoms, SPINE)
    with pytest.raises(TreeIndexError):
        attach_index(three_atoms, 3)


def test_tree_statistics(three_atoms):
    assert tmrca(three_atoms) == 5.0
    assert ancestor_count(three_atoms, 1.5) == 2
    assert ancestor_count(three_atoms, 5.0) == 0
    assert total_length(three_atoms) == 8.0
    assert truncated_length(three_atoms, 1.5) == 4.0
    assert truncated_length(three_atoms, 0.0) == 8.0


def test_empty_process_statistics():
    ap = AncestralProcess()
    assert tmrca(ap) == 0.0
    assert total_length(ap) == 0.0
    assert spine_distances(ap).size == 0


def test_statistics_reject_bad_depth(three_atoms):
    with pytest.raises(ParameterError):
        ancestor_count(three_atoms, 0.0)
    with pytest.raises(ParameterError):
        truncated_length(three_atoms, -1.0)


def test_spine_distances(three_atoms, both_sides):
    np.testing.assert_array_equal(spine_distances(three_atoms), [4.0, 10.0, 10.0])
    np.testing.assert_array_equal(spine_distances(both_sides), [6.0, 2.0])


def test_leaf_distance_matrix(three_atoms):
    matrix = leaf_distance_matrix(three_atoms)
    assert matrix.shape == (4, 4)
    np.testing.assert_array_equal(matrix, matrix.T)
    np.testing.assert_array_equal(np.diag(matrix), 0.0)
    np.testing.assert_array_equal(matrix[0, 1:], spine_distances(three_atoms))
    assert matrix[1, 2] == 10.0


def _midpoint_integral(ap, cuts):
    """Midpoint Riemann sum of ancestor_count over the pieces between ``cuts``."""
    widths = np.diff(cuts)
    mids = cuts[:-1] + widths / 2.0
    return math.fsum(w * ancestor_count(ap, s) for w, s in zip(widths, mids))


def test_ancestor_count_integrates_to_total_length():
    rng = RngStream(31)
    for i in range(50):
        ap = random_process(rng.child(i))
        # ancestor_count is constant between consecutive depths
        cuts = np.concatenate([[0.0], np.unique(ap.depths)])
        assert _midpoint_integral(ap, cuts) == pytest.approx(
            total_length(ap), rel=1e-9
        )


def test_ancestor_count_on_uniform_grid():
    rng = RngStream(32)
    step = 1e-3
    for i in range(10):
        ap = random_process(rng.child(i))
        cuts = np.arange(0.0, tmrca(ap) + 2 * step, step)
        # each atom is off by at most half a step
        assert abs(_midpoint_integral(ap, cuts) - total_length(ap)) <= len(ap) * step


def _entry_depths(ap, leaf):
    """Depth at which the lineage of ``leaf`` enters each segment it climbs."""
    entries = {leaf: 0.0}
    segment = leaf
    while segment is not SPINE:
        depth = float(ap.depths[segment])
        segment = attach_index(ap, segment)
        entries.setdefault(segment, depth)
    return entries


def test_attach_index_chains_give_leaf_distances():
    rng = RngStream(33)
    for i in range(50):
        ap = random_process(rng.child(i))
        leaves = [SPINE, *range(len(ap))]
        paths = {leaf: _entry_depths(ap, leaf) for leaf in leaves}
        for a in leaves:
            for b in leaves:
                shared = paths[a].keys() & paths[b].keys()
                merge = min(max(paths[a][s], paths[b][s]) for s in shared)
                assert leaf_distance(ap, a, b) == 2.0 * merge
