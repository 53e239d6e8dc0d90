"""Tests for the sampling frames and the exact samplers."""

import math

import numpy as np
import pytest

from genea.core.params import BranchingParams, RngStream
from genea.exceptions import DegenerateThetaError, ParameterError
from genea.harness.runner import run_replicates
from genea.harness.suites import tmrca_at_h_frequencies
from genea.harness.verdicts import ks_two_sample, nondecreasing_test
from genea.sampling.frame import (
    SampleFrame,
    StepCase,
    draw_positions,
    static_intervals,
    static_lengths,
)
from genea.sampling.samplers import (
    conditional_z0_frame,
    sample_conditional_tmrca,
    sample_dynamic_h,
    sample_dynamic_v,
    sample_full_ancestral,
    sample_full_depths,
    sample_static,
    sample_static_conditional_z0,
    subsample_arrays,
)
from genea.tree.ancestral import tmrca, validate

PARAMS = BranchingParams(1.0, 1.0)


def test_static_intervals():
    frame = SampleFrame(1.0, 1.0, (0.5, -0.25, 0.75))
    lower, upper = static_intervals(frame)
    np.testing.assert_array_equal(lower, [0.0, -0.25, 0.5])
    np.testing.assert_array_equal(upper, [0.5, 0.0, 0.75])
    np.testing.assert_allclose(static_lengths(frame), [0.5, 0.25, 0.25])


@pytest.mark.parametrize(
    "xs",
    [(0.0,), (0.5, 0.5), (1.0,), (-1.5,)],
)
def test_frame_rejects_bad_positions(xs):
    with pytest.raises(ParameterError):
        SampleFrame(1.0, 1.0, xs)


def test_frame_rejects_infinite_boundary():
    with pytest.raises(ParameterError):
        SampleFrame(float("inf"), 1.0, ())


def test_draw_positions_inside_support():
    xs, _ = draw_positions(0.3, 0.7, 500, RngStream(1))
    assert xs.shape == (500,)
    assert np.all((xs > -0.3) & (xs < 0.7) & (xs != 0))
    assert len(np.unique(xs)) == 500


def test_static_is_deterministic():
    first = sample_static(PARAMS, 10, RngStream(3))
    second = sample_static(PARAMS, 10, RngStream(3))
    assert first == second
    assert sample_static(PARAMS, 10, RngStream(4))[1] != first[1]


def test_static_atoms_at_sampled_positions():
    frame, ap = sample_static(PARAMS, 25, RngStream(8))
    assert len(ap) == 25
    np.testing.assert_array_equal(ap.positions, sorted(frame.xs))
    assert (ap.e_g, ap.e_d) == (frame.e_g, frame.e_d)
    assert validate(ap) is None


def test_static_conditional_z0_splits_population():
    frame, ap = sample_static_conditional_z0(PARAMS, 6, 2.0, RngStream(2))
    assert (frame.e_g, frame.e_d) == (1.0, 1.0)
    assert ap.z0 == 2.0
    frame, _ = sample_static_conditional_z0(PARAMS, 6, 2.0, RngStream(2), split=0.25)
    assert (frame.e_g, frame.e_d) == (0.5, 1.5)


@pytest.mark.parametrize("split", [0.0, 1.0, 1.5])
def test_conditional_z0_rejects_split(split):
    with pytest.raises(ParameterError):
        conditional_z0_frame(1.0, 3, RngStream(0), split)


def test_dynamic_v_is_nested():
    run = sample_dynamic_v(PARAMS, 15, RngStream(21))
    assert run.n == 15
    sequence = run.sequence
    for smaller, larger in zip(sequence, sequence[1:]):
        assert set(smaller.atoms) < set(larger.atoms)
        assert tmrca(smaller) <= tmrca(larger)
    assert validate(run.final) is None


def test_dynamic_v_interior_heights_below_kappa():
    run = sample_dynamic_v(PARAMS, 30, RngStream(4))
    interior = run.trace.interior()
    assert interior
    for record in interior:
        assert record.height <= record.hmax
        assert record.kappa < record.step - 1


def test_dynamic_h_keeps_positions_and_swaps_heights():
    run = sample_dynamic_h(PARAMS, 30, RngStream(9))
    assert run.positions == run.frame.xs
    for record in run.trace.records:
        if record.case is StepCase.BOUNDARY:
            assert record.kept is None
            continue
        assert 0.0 < record.p_keep < 1.0
        if record.kept:
            assert record.height <= record.hmax
            assert record.kappa_height == record.hmax
        else:
            assert record.height == record.hmax
            assert record.kappa_height <= record.hmax
    heights = [tmrca(ap) for ap in run.sequence]
    assert heights == sorted(heights)


def test_dynamic_depths_at_rejects_step():
    run = sample_dynamic_h(PARAMS, 3, RngStream(1))
    with pytest.raises(ParameterError):
        run.depths_at(0)
    with pytest.raises(ParameterError):
        run.depths_at(4)


def test_conditional_tmrca_bounded_by_h():
    for seed in range(20):
        frame, ap = sample_conditional_tmrca(PARAMS, 8, 0.7, RngStream(seed))
        assert tmrca(ap) <= 0.7
        assert -frame.e_g < frame.forced < frame.e_d
        assert validate(ap) is None


def test_conditional_tmrca_reaches_h_more_often_as_n_grows():
    frequencies = tmrca_at_h_frequencies(
        PARAMS, 1.0, (1, 5, 25, 125), 400, RngStream(4)
    )
    means, ses = zip(*frequencies)
    assert nondecreasing_test(means, ses, k_sigma=4.0).passed
    # one sampled individual catches the deepest lineage with probability 1/3
    assert means[0] < 0.5 < 0.9 < means[-1]


def test_nondecreasing_test_flags_a_drop():
    assert nondecreasing_test([0.2, 0.5, 0.5], [0.0, 0.0, 0.0]).passed
    dropped = nondecreasing_test([0.2, 0.9, 0.5], [0.01, 0.01, 0.01])
    assert not dropped.passed
    assert dropped.statistic == pytest.approx(0.4 - 4.0 * math.sqrt(2.0) * 0.01)


def test_full_ancestral_above_truncation():
    ap = sample_full_ancestral(PARAMS, 0.05, RngStream(12))
    assert np.all(ap.depths > 0.05)
    assert validate(ap) is None


def test_full_ancestral_given_boundaries():
    ap = sample_full_ancestral(PARAMS, 0.01, RngStream(12), boundaries=(0.5, 2.0))
    assert (ap.e_g, ap.e_d) == (0.5, 2.0)
    assert np.all((ap.positions > -0.5) & (ap.positions < 2.0))


def test_full_depths_count_mean():
    # E[count | Z0 = 2] = 2 c(eps) = 4 / expm1(2 eps) with beta = theta = 1
    eps = 0.1
    counts = run_replicates(
        lambda rng: len(sample_full_depths(PARAMS, eps, rng, (1.0, 1.0))[0]),
        2000,
        RngStream(6),
    )
    expected = 4.0 / np.expm1(2 * eps)
    assert np.mean(counts) == pytest.approx(expected, abs=5 * np.sqrt(expected / 2000))


def test_subsample_takes_deepest_atom_of_each_interval():
    rng = RngStream(31)
    full = sample_full_ancestral(PARAMS, 0.01, rng.child(0), boundaries=(1.0, 1.0))
    frame = conditional_z0_frame(2.0, 6, rng.child(1))
    positions, depths = subsample_arrays(
        PARAMS, full.positions, full.depths, frame, 0.01, rng.child(2)
    )
    lower, upper = static_intervals(frame)
    for k in range(frame.n):
        inside = (full.positions > lower[k]) & (full.positions < upper[k])
        assert lower[k] < positions[k] < upper[k]
        if inside.any():
            deepest = np.argmax(np.where(inside, full.depths, -np.inf))
            assert depths[k] == full.depths[deepest]
            assert positions[k] == full.positions[deepest]
        else:
            assert depths[k] <= 0.01


@pytest.mark.parametrize(
    "sampler",
    [sample_static, sample_dynamic_v, sample_dynamic_h],
)
def test_samplers_reject_zero_theta(sampler):
    with pytest.raises(DegenerateThetaError):
        sampler(BranchingParams(1.0, 0.0), 5, RngStream(0))


@pytest.mark.parametrize("n", [0, -1, True, 2.5])
def test_samplers_reject_bad_n(n):
    with pytest.raises(ParameterError):
        sample_static(PARAMS, n, RngStream(0))


def test_conditional_rejects_bad_h():
    with pytest.raises(ParameterError):
        sample_conditional_tmrca(PARAMS, 3, 0.0, RngStream(0))


def test_static_and_dynamic_v_agree_in_law():
    static = run_replicates(
        lambda rng: tmrca(sample_static(PARAMS, 5, rng)[1]), 2000, RngStream(1)
    )
    dynamic = run_replicates(
        lambda rng: tmrca(sample_dynamic_v(PARAMS, 5, rng).final), 2000, RngStream(2)
    )
    verdict = ks_two_sample(static, dynamic, alpha=0.001)
    assert verdict.passed
