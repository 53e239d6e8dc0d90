"""Acceptance suites: seeded experiments judged by fixed-threshold verdicts."""

import itertools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import partial
from typing import Any

import numpy as np

from genea.core.distributions import (
    ZETA_2,
    c_theta,
    integral_h_c,
    mean_zeta_star,
    mean_zeta_star_closed_form,
    mean_zeta_star_expansion,
    phi,
    sample_zeta_star,
    sample_zeta_star_conditioned,
    second_moment_zeta_star,
    second_moment_zeta_star_expansion,
    zeta_star_cdf,
    zeta_star_conditioned_cdf,
)
from genea.core.params import BranchingParams, RngStream
from genea.defaults import (
    ALPHA,
    CONDITIONAL_BIN,
    CONDITIONAL_EPS,
    CONDITIONAL_MAX_ATTEMPTS,
    CONDITIONAL_N_GRID,
    DEFAULT_EPS,
    DEFAULT_N,
    DEFAULT_N_GRID,
    DEFAULT_REPS,
    DEFAULT_THREADS,
    DISTRIBUTION_GRID,
    EEX_EPS,
    EQUALITY_ALPHA,
    EQUALITY_N,
    K_SIGMA,
    LAPLACE_LAMBDAS,
    LAPLACE_Z0,
    LENGTH_EPS_GRID,
    LENGTH_N,
    MAX_DISCARD_FRACTION,
    METRIC_MAX_ATOMS,
    METRIC_POINTS,
    METRIC_PROCESSES,
    METRIC_TOL,
    MOMENT_DRAWS,
    NEWICK_TOL,
    STATIONARY_EPS,
)
from genea.exceptions import HarnessError, ParameterError
from genea.harness.runner import mean_and_se, run_replicates
from genea.harness.verdicts import (
    TestVerdict,
    all_passed,
    correlation_test,
    ks_one_sample,
    ks_two_sample,
    moment_test,
    nondecreasing_test,
    tolerance_test,
)
from genea.lengths import (
    compensated_L_eps,
    compensator_lambda_asymptotic,
    coupled_moment,
    laplace_exact_target,
    laplace_limit_target,
    sample_length_summary,
    variance_L_eps,
)
from genea.logging import logger
from genea.sampling.frame import draw_positions, sample_frame
from genea.sampling.samplers import (
    sample_conditional_tmrca,
    sample_dynamic_h,
    sample_dynamic_v,
    sample_full_arrays,
    sample_full_depths,
    sample_static,
    subsample_arrays,
)
from genea.tree.ancestral import (
    SPINE,
    AncestralProcess,
    TreePoint,
    leaf_distance_matrix,
    point_distance,
    spine_distances,
    tmrca,
    total_length,
)
from genea.tree.contour import contour_distance
from genea.tree.export import default_leaf_labels, newick_leaf_distances, to_newick


@dataclass(frozen=True)
class SuiteConfig:
    """Inputs shared by the suites. ``z0`` and ``h`` fall back to 1."""

    params: BranchingParams
    reps: int = DEFAULT_REPS
    n: int = DEFAULT_N
    eps: float = DEFAULT_EPS
    z0: float | None = None
    h: float | None = None
    threads: int = DEFAULT_THREADS
    alpha: float = ALPHA
    k_sigma: float = K_SIGMA

    def __post_init__(self) -> None:
        if self.reps < 2:
            raise ParameterError(f"reps must be >= 2, got {self.reps}")
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if not self.eps > 0:
            raise ParameterError(f"eps must be > 0, got {self.eps}")

    @property
    def z0_or_default(self) -> float:
        return 1.0 if self.z0 is None else self.z0

    @property
    def h_or_default(self) -> float:
        return 1.0 if self.h is None else self.h


@dataclass(frozen=True)
class ExperimentReport:
    suite: str
    seed: int
    params: dict[str, float]
    tests: tuple[TestVerdict, ...]

    @property
    def passed(self) -> bool:
        return all_passed(self.tests)

    def as_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "params": self.params,
            "tests": [verdict.as_dict() for verdict in self.tests],
            "passed": self.passed,
        }


def _columns(rows: Sequence[tuple[float, ...]]) -> list[np.ndarray]:
    return [np.asarray(column, dtype=np.float64) for column in zip(*rows)]


def _exponential_cdf(rate: float, x: np.ndarray) -> np.ndarray:
    return -np.expm1(-rate * np.maximum(x, 0.0))


def _uniform_cdf(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 1.0)


# distributions


def _rejection_draws(
    params: BranchingParams, delta: float, hmax: float, count: int, rng: RngStream
) -> np.ndarray:
    kept: list[np.ndarray] = []
    total = 0
    for batch in range(CONDITIONAL_MAX_ATTEMPTS):
        draws = np.asarray(
            sample_zeta_star(params, delta, rng.child(batch), size=count)
        )
        accepted = draws[draws <= hmax]
        kept.append(accepted)
        total += accepted.size
        if total >= count:
            return np.concatenate(kept)[:count]
    raise HarnessError(
        f"rejection sampling accepted {total} of {count} draws below hmax={hmax}"
    )


def distributions_suite(config: SuiteConfig, rng: RngStream) -> list[TestVerdict]:
    """Depth laws, moments, expansions and quadrature identities."""
    verdicts: list[TestVerdict] = []
    grid = itertools.product(DISTRIBUTION_GRID, repeat=3)
    for i, (beta, theta, delta) in enumerate(grid):
        params = BranchingParams(beta, theta)
        draws = sample_zeta_star(params, delta, rng.child(0).child(i), size=config.reps)
        verdicts.append(
            ks_one_sample(
                draws,
                partial(zeta_star_cdf, params, delta),
                f"zeta-star-law beta={beta:g} theta={theta:g} delta={delta:g}",
                config.alpha,
            )
        )

    params = config.params
    for i, (delta, hmax) in enumerate(((0.5, 0.5), (2.0, 1.0))):
        stream = rng.child(1).child(i)
        draws = np.asarray(
            sample_zeta_star_conditioned(
                params, delta, hmax, stream.child(0), size=config.reps
            )
        )
        label = f"delta={delta:g} hmax={hmax:g}"
        verdicts.append(
            ks_one_sample(
                draws,
                partial(zeta_star_conditioned_cdf, params, delta, hmax),
                f"conditioned-law {label}",
                config.alpha,
            )
        )
        rejected = _rejection_draws(params, delta, hmax, config.reps, stream.child(1))
        verdicts.append(
            ks_two_sample(
                draws, rejected, f"conditioned-vs-rejection {label}", config.alpha
            )
        )

    for i, delta in enumerate((0.05, 1.0)):
        draws = np.asarray(
            sample_zeta_star(params, delta, rng.child(2).child(i), size=MOMENT_DRAWS)
        )
        verdicts.append(
            moment_test(
                draws,
                mean_zeta_star(params, delta),
                config.k_sigma,
                f"zeta-star-mean delta={delta:g}",
            )
        )
        verdicts.append(
            moment_test(
                draws**2,
                second_moment_zeta_star(params, delta),
                config.k_sigma,
                f"zeta-star-second-moment delta={delta:g}",
            )
        )

    for x in (2e-3, 2e-2, 0.1):
        delta = x / (2.0 * params.theta)
        remainder = x * (abs(math.log(x)) + 2.0)
        verdicts.append(
            tolerance_test(
                mean_zeta_star(params, delta),
                mean_zeta_star_expansion(params, delta),
                delta / params.beta * remainder,
                f"mean-expansion x={x:g}",
            )
        )
        verdicts.append(
            tolerance_test(
                second_moment_zeta_star(params, delta),
                second_moment_zeta_star_expansion(params, delta),
                delta / (params.beta**2 * params.theta) * remainder,
                f"second-moment-expansion x={x:g}",
            )
        )

    for delta in (1e-3, 0.1, 1.0, 10.0, 100.0):
        exact = mean_zeta_star(params, delta)
        verdicts.append(
            tolerance_test(
                float(mean_zeta_star_closed_form(params, delta)),
                exact,
                1e-7 * max(1.0, exact),
                f"closed-form-mean delta={delta:g}",
            )
        )

    identity = 2.0 * params.beta**2 * params.theta * integral_h_c(params)
    verdicts.append(tolerance_test(identity, ZETA_2, 1e-6, "integral-h-c-identity"))
    for k in range(1, 6):
        harmonic = math.fsum(1.0 / j for j in range(1, k + 1))
        verdicts.append(tolerance_test(phi(k), k * harmonic, 1e-8, f"phi({k})"))
    return verdicts


# metric-oracle


def random_process(
    rng: RngStream, max_atoms: int = METRIC_MAX_ATOMS
) -> AncestralProcess:
    """1..max_atoms atoms at uniform positions in (-1, 1), depths 0.1 + Exp(1)."""
    count = min(1 + int(max_atoms * rng.uniform_open()), max_atoms)
    us, _ = draw_positions(1.0, 1.0, count, rng)
    zetas = 0.1 + np.asarray(rng.exponential(1.0, count))
    return AncestralProcess.from_arrays(us, zetas, 1.0, 1.0)


def random_points(
    ap: AncestralProcess, rng: RngStream, count: int = METRIC_POINTS
) -> list[TreePoint]:
    """Tree points on random segments; every other point is a leaf."""
    points: list[TreePoint] = []
    for j in range(count):
        k = min(int((len(ap) + 1) * rng.uniform_open()), len(ap))
        segment = SPINE if k == len(ap) else k
        if j % 2 == 0:
            depth = 0.0
        elif segment is SPINE:
            depth = float(rng.uniform(0.0, 1.5 * tmrca(ap) + 1.0))
        else:
            zeta = float(ap.depths[k])
            below = float(np.nextafter(zeta, 0.0))
            depth = min(zeta * float(rng.uniform_open()), below)
        points.append(TreePoint(segment, depth))
    return points


def four_point_violation(distances: np.ndarray) -> float:
    """Largest gap between the two largest pairing sums over all quadruples."""
    worst = 0.0
    for a, b, c, d in itertools.combinations(range(len(distances)), 4):
        sums = sorted(
            (
                distances[a, b] + distances[c, d],
                distances[a, c] + distances[b, d],
                distances[a, d] + distances[b, c],
            )
        )
        worst = max(worst, sums[2] - sums[1])
    return worst


def _newick_error(ap: AncestralProcess) -> float:
    labels = default_leaf_labels(ap)
    parsed = newick_leaf_distances(to_newick(ap, labels))
    matrix = leaf_distance_matrix(ap)
    return max(
        abs(matrix[a, b] - parsed[labels[a]][labels[b]])
        for a in range(len(labels))
        for b in range(len(labels))
    )


def metric_oracle_suite(config: SuiteConfig, rng: RngStream) -> list[TestVerdict]:
    """Point distances against the contour construction; four-point condition."""
    contour_error = four_point = newick_error = 0.0
    for i in range(METRIC_PROCESSES):
        stream = rng.child(i)
        ap = random_process(stream)
        points = random_points(ap, stream)
        size = len(points)
        direct = np.zeros((size, size))
        for a, b in itertools.combinations(range(size), 2):
            d = point_distance(ap, points[a], points[b])
            direct[a, b] = direct[b, a] = d
            contour_error = max(
                contour_error, abs(d - contour_distance(ap, points[a], points[b]))
            )
        four_point = max(four_point, four_point_violation(direct))
        newick_error = max(newick_error, _newick_error(ap))
    details = {"processes": METRIC_PROCESSES, "points": METRIC_POINTS}
    checks = (
        ("metric-vs-contour", contour_error, METRIC_TOL),
        ("four-point-condition", four_point, METRIC_TOL),
        ("newick-distances", newick_error, NEWICK_TOL),
    )
    return [
        TestVerdict(name, value, tol, METRIC_PROCESSES, details)
        for name, value, tol in checks
    ]


# sampler-equality


def _tree_statistics(ap: AncestralProcess) -> tuple[float, ...]:
    """(total length, tmrca, sorted leaf-to-spine distances...)."""
    spine = np.sort(spine_distances(ap))
    return (total_length(ap), tmrca(ap), *(float(d) for d in spine))


def statistic_names(n: int) -> list[str]:
    """Labels of the :func:`_tree_statistics` columns for n sampled leaves."""
    return ["total-length", "tmrca", *(f"spine-distance-{j}" for j in range(1, n + 1))]


def _static_arm(
    params: BranchingParams, n: int, stream: RngStream
) -> tuple[float, ...]:
    return _tree_statistics(sample_static(params, n, stream)[1])


def _dynamic_v_arm(
    params: BranchingParams, n: int, stream: RngStream
) -> tuple[float, ...]:
    return _tree_statistics(sample_dynamic_v(params, n, stream).final)


def _dynamic_h_arm(
    params: BranchingParams, n: int, stream: RngStream
) -> tuple[tuple[float, ...], list[tuple[bool, float]]]:
    run = sample_dynamic_h(params, n, stream)
    coins = [(bool(r.kept), float(r.p_keep)) for r in run.trace.interior()]
    return _tree_statistics(run.final), coins


def _subsample_arm(
    params: BranchingParams, n: int, stream: RngStream
) -> tuple[float, ...]:
    us, zetas, e_g, e_d = sample_full_arrays(params, STATIONARY_EPS, stream.child(0))
    frame = sample_frame(e_g, e_d, n, stream.child(1))
    positions, depths = subsample_arrays(
        params, us, zetas, frame, STATIONARY_EPS, stream.child(2)
    )
    return _tree_statistics(AncestralProcess.from_arrays(positions, depths, e_g, e_d))


_EQUALITY_PAIRS = (
    ("static", "dynamic-v"),
    ("static", "dynamic-h"),
    ("dynamic-v", "dynamic-h"),
    ("static", "full-subsample"),
)


def sampler_equality_suite(config: SuiteConfig, rng: RngStream) -> list[TestVerdict]:
    """Static, dynamic-V, dynamic-H and full-process subsamples agree in law.

    For every n in EQUALITY_N the total length, the tmrca and each order
    statistic of the leaf-to-spine distances go through a pairwise
    two-sample KS test. ``config.alpha`` applies when below EQUALITY_ALPHA.
    """
    params, reps, threads = config.params, config.reps, config.threads
    alpha = min(config.alpha, EQUALITY_ALPHA)
    verdicts: list[TestVerdict] = []
    coins: list[tuple[bool, float]] = []
    for i, n in enumerate(EQUALITY_N):
        stream = rng.child(i)

        def arm(task: Callable[..., Any], index: int) -> list[Any]:
            return run_replicates(
                partial(task, params, n), reps, stream.child(index), threads
            )

        h_runs = arm(_dynamic_h_arm, 2)
        arms = {
            "static": _columns(arm(_static_arm, 0)),
            "dynamic-v": _columns(arm(_dynamic_v_arm, 1)),
            "dynamic-h": _columns([stats for stats, _ in h_runs]),
            "full-subsample": _columns(arm(_subsample_arm, 3)),
        }
        verdicts.extend(
            ks_two_sample(arms[a][k], arms[b][k], f"{a}-vs-{b} n={n} {stat}", alpha)
            for a, b in _EQUALITY_PAIRS
            for k, stat in enumerate(statistic_names(n))
        )
        coins.extend(coin for _, run_coins in h_runs for coin in run_coins)
    if len(coins) >= 2:
        kept, p_keep = _columns(coins)
        verdicts.append(
            moment_test(kept - p_keep, 0.0, config.k_sigma, "dynamic-h-keep-rate")
        )
    return verdicts


# eex


def _max_atom(
    params: BranchingParams, eps: float, stream: RngStream
) -> tuple[float, float, float, float] | None:
    us, zetas, e_g, e_d = sample_full_arrays(params, eps, stream)
    if not len(zetas):
        return None
    k = int(np.argmax(zetas))
    return e_g, e_d, float(us[k]), float(zetas[k])


def eex_pit_test(
    params: BranchingParams,
    reps: int,
    rng: RngStream,
    eps: float = EEX_EPS,
    threads: int = DEFAULT_THREADS,
    alpha: float = ALPHA,
    k_sigma: float = K_SIGMA,
    tail_in_rate: bool = True,
) -> list[TestVerdict]:
    """Position of the deepest atom: the triple (e_g + X_-, |X|, e_d - X_+) is
    i.i.d. exponential of rate 2 theta + c(zeta_max) and the sign of X is fair.

    Each coordinate goes through its exponential CDF and is tested for
    uniformity; the three transformed coordinates must be uncorrelated.
    ``tail_in_rate=False`` drops c(zeta_max) from the rate, which the KS
    tests must reject.
    """
    params.require_finite_population("eex_pit_test")
    results = run_replicates(partial(_max_atom, params, eps), reps, rng, threads)
    kept = [r for r in results if r is not None]
    discarded = reps - len(kept)
    if discarded > MAX_DISCARD_FRACTION * reps:
        raise HarnessError(
            f"{discarded} of {reps} replicates had no atom above eps={eps}; "
            "lower eps"
        )
    if discarded:
        logger.info("Discarded empty replicates", extra={"discarded": discarded})
    e_g, e_d, x, h = _columns(kept)
    rate = 2.0 * params.theta
    if tail_in_rate:
        rate = rate + np.asarray(c_theta(params, h))
    triple = {
        "left": e_g + np.minimum(x, 0.0),
        "middle": np.abs(x),
        "right": e_d - np.maximum(x, 0.0),
    }
    pits = {label: -np.expm1(-rate * value) for label, value in triple.items()}
    verdicts = [
        ks_one_sample(u, _uniform_cdf, f"eex-pit-{label}", alpha)
        for label, u in pits.items()
    ]
    verdicts.append(moment_test((x >= 0).astype(np.float64), 0.5, k_sigma, "eex-sign"))
    verdicts.extend(
        correlation_test(pits[a], pits[b], k_sigma, f"eex-correlation {a}-{b}")
        for a, b in itertools.combinations(pits, 2)
    )
    return verdicts


def eex_suite(config: SuiteConfig, rng: RngStream) -> list[TestVerdict]:
    return eex_pit_test(
        config.params,
        config.reps,
        rng,
        threads=config.threads,
        alpha=config.alpha,
        k_sigma=config.k_sigma,
    )


# laplace


def laplace_suite(config: SuiteConfig, rng: RngStream) -> list[TestVerdict]:
    """MC Laplace transform of the compensated L_eps against its limit."""
    params, eps = config.params, config.eps
    z0_grid = LAPLACE_Z0 if config.z0 is None else (config.z0,)
    verdicts: list[TestVerdict] = []
    for i, z0 in enumerate(z0_grid):
        values = compensated_L_eps(
            params, z0, eps, config.reps, rng.child(i), config.threads
        )
        for lam in LAPLACE_LAMBDAS:
            estimate, se = mean_and_se(np.exp(-lam * values))
            target = laplace_limit_target(params, z0, lam)
            verdicts.append(
                TestVerdict(
                    f"laplace z0={z0:g} lambda={lam:g}",
                    abs(estimate - target),
                    config.k_sigma * se,
                    config.reps,
                    {
                        "estimate": estimate,
                        "se": se,
                        "target": target,
                        "exact_target": laplace_exact_target(params, z0, lam, eps),
                        "z0": z0,
                        "lambda": lam,
                        "eps": eps,
                    },
                )
            )
    return verdicts


# length-moments


def length_moments_suite(config: SuiteConfig, rng: RngStream) -> list[TestVerdict]:
    """Mean and variance of Lambda_n, L_eps variances and the coupled decay."""
    params, reps, threads = config.params, config.reps, config.threads
    k = config.k_sigma
    z0, n = config.z0_or_default, LENGTH_N
    summaries = run_replicates(
        partial(sample_length_summary, params, z0, n), reps, rng.child(0), threads
    )
    raw, compensators, compensated = _columns(
        [(s.raw, s.compensator, s.compensated) for s in summaries]
    )
    asymptotic = compensator_lambda_asymptotic(params, z0, n)
    remainder = 10.0 * math.log(n) / n
    limit_variance = 2.0 * z0 * integral_h_c(params)
    # Var(Lambda_n | Z0) falls short of the limit by about sum_k E[zeta*_|I_k|]^2
    log_term = math.log(n / (2.0 * params.theta * z0)) + 1.0
    variance_floor = 2.0 * (z0 / params.beta) ** 2 * log_term**2 / n
    verdicts = [
        moment_test(raw, asymptotic, k, f"mean-length n={n}", floor=remainder),
        moment_test(
            compensators,
            asymptotic,
            k,
            "exact-vs-asymptotic-compensator",
            floor=remainder,
        ),
        moment_test(compensated, 0.0, k, f"compensated-mean n={n}"),
        moment_test(
            compensated**2,
            limit_variance,
            k,
            f"compensated-variance n={n}",
            floor=variance_floor,
        ),
    ]

    exact_variances: list[float] = []
    for i, eps in enumerate(LENGTH_EPS_GRID):
        stream = rng.child(1).child(i)
        values = compensated_L_eps(params, z0, eps, reps, stream, threads)
        exact = variance_L_eps(params, z0, eps)
        exact_variances.append(exact)
        verdicts.append(moment_test(values**2, exact, k, f"L-eps-variance eps={eps:g}"))
    steps = [a - b for a, b in zip(exact_variances, exact_variances[1:])]
    verdicts.append(
        TestVerdict(
            "L-eps-variance-increasing",
            max(steps),
            0.0,
            len(exact_variances),
            {"variances": exact_variances, "limit": limit_variance},
        )
    )

    moments = [
        coupled_moment(params, z0, m, reps, rng.child(2).child(i), threads)
        for i, m in enumerate(DEFAULT_N_GRID)
    ]
    seconds = [m.second_moment for m in moments]
    verdicts.append(
        TestVerdict(
            "coupled-second-moment-decreasing",
            max(b - a for a, b in zip(seconds, seconds[1:])),
            0.0,
            reps,
            {
                "n": [m.n for m in moments],
                "second_moment": seconds,
                "se": [m.se for m in moments],
                "fitted_c": max(m.scaled for m in moments),
            },
        )
    )
    return verdicts


# stationary


def _stationary_replicate(
    params: BranchingParams, stream: RngStream
) -> tuple[float, float, float, float, float]:
    zetas, e_g, e_d = sample_full_depths(params, STATIONARY_EPS, stream)
    if len(zetas):
        deepest, first = float(zetas.max()), float(zetas[0])
    else:
        deepest = float(
            sample_zeta_star_conditioned(params, e_g + e_d, STATIONARY_EPS, stream)
        )
        first = math.nan
    return e_g, e_d, deepest, float(len(zetas)), first


def stationary_suite(config: SuiteConfig, rng: RngStream) -> list[TestVerdict]:
    """Population size, boundaries, atom counts and the height of the whole tree."""
    params, k = config.params, config.k_sigma
    e_g, e_d, deepest, counts, first = _columns(
        run_replicates(
            partial(_stationary_replicate, params), config.reps, rng, config.threads
        )
    )
    rate = 2.0 * params.theta
    tail = float(c_theta(params, STATIONARY_EPS))

    def height_cdf(h: np.ndarray) -> np.ndarray:
        return (rate / (rate + np.asarray(c_theta(params, h)))) ** 2

    def depth_cdf(h: np.ndarray) -> np.ndarray:
        above = np.maximum(h, STATIONARY_EPS)
        return 1.0 - np.asarray(c_theta(params, above)) / tail

    z0 = e_g + e_d
    exponential = partial(_exponential_cdf, rate)
    depths = first[~np.isnan(first)]
    return [
        moment_test(z0, 1.0 / params.theta, k, "population-size-mean"),
        moment_test(deepest, 3.0 / (4.0 * params.beta * params.theta), k, "tmrca-mean"),
        ks_one_sample(deepest, height_cdf, "tmrca-law", config.alpha),
        ks_one_sample(e_g, exponential, "left-boundary-law", config.alpha),
        ks_one_sample(e_d, exponential, "right-boundary-law", config.alpha),
        correlation_test(e_g, e_d, k, "boundary-correlation"),
        moment_test(counts - z0 * tail, 0.0, k, "atom-count-mean"),
        ks_one_sample(depths, depth_cdf, "atom-depth-law", config.alpha),
    ]


# conditional


def _conditional_replicate(
    params: BranchingParams, n: int, h: float, stream: RngStream
) -> tuple[float, float, float, float, float]:
    frame, ap = sample_conditional_tmrca(params, n, h, stream)
    return total_length(ap), tmrca(ap), frame.e_g, frame.e_d, float(frame.forced)


def tmrca_at_h_frequencies(
    params: BranchingParams,
    h: float,
    n_grid: Sequence[int],
    reps: int,
    rng: RngStream,
    threads: int = DEFAULT_THREADS,
) -> list[tuple[float, float]]:
    """Per n, the share of conditioned trees with tmrca exactly h and its se.

    The tmrca falls short of h only when the deepest lineage lies beyond
    the outermost sampled individual, so the share grows with n.
    """
    frequencies = []
    for i, n in enumerate(n_grid):
        results = run_replicates(
            partial(_conditional_replicate, params, n, h), reps, rng.child(i), threads
        )
        at_h = np.asarray([height == h for _, height, *_ in results], dtype=np.float64)
        frequencies.append(mean_and_se(at_h))
    return frequencies


def _binned_replicate(
    params: BranchingParams, n: int, h: float, stream: RngStream
) -> float | None:
    us, zetas, e_g, e_d = sample_full_arrays(params, CONDITIONAL_EPS, stream.child(0))
    if not len(zetas) or not h <= zetas.max() <= h + CONDITIONAL_BIN:
        return None
    frame = sample_frame(e_g, e_d, n, stream.child(1))
    _, depths = subsample_arrays(
        params, us, zetas, frame, CONDITIONAL_EPS, stream.child(2)
    )
    return math.fsum(depths)


def _binned_lengths(
    params: BranchingParams, n: int, h: float, count: int, rng: RngStream, threads: int
) -> np.ndarray:
    accepted: list[float] = []
    task = partial(_binned_replicate, params, n, h)
    for batch in range(CONDITIONAL_MAX_ATTEMPTS):
        results = run_replicates(task, count, rng.child(batch), threads)
        accepted.extend(r for r in results if r is not None)
        if len(accepted) >= count:
            return np.asarray(accepted[:count])
    raise HarnessError(
        f"only {len(accepted)} of {count} population trees fell in "
        f"[{h}, {h + CONDITIONAL_BIN}]"
    )


def conditional_suite(config: SuiteConfig, rng: RngStream) -> list[TestVerdict]:
    """Trees conditioned on the population tree height against binned ones.

    Also checks that P(tmrca = h) does not drop along CONDITIONAL_N_GRID.
    """
    params, n, h, k = config.params, config.n, config.h_or_default, config.k_sigma
    lengths, heights, e_g, e_d, x = _columns(
        run_replicates(
            partial(_conditional_replicate, params, n, h),
            config.reps,
            rng.child(0),
            config.threads,
        )
    )
    rate = 2.0 * params.theta + float(c_theta(params, h))
    cdf = partial(_exponential_cdf, rate)
    verdicts = [
        TestVerdict(
            "tmrca-bounded-by-h",
            float(heights.max()) - h,
            0.0,
            config.reps,
            {"fraction_at_h": float(np.mean(heights == h))},
        ),
        ks_one_sample(e_g + np.minimum(x, 0.0), cdf, "left-gap-law", config.alpha),
        ks_one_sample(np.abs(x), cdf, "deepest-position-law", config.alpha),
        ks_one_sample(e_d - np.maximum(x, 0.0), cdf, "right-gap-law", config.alpha),
        moment_test((x >= 0).astype(np.float64), 0.5, k, "deepest-sign"),
    ]
    binned = _binned_lengths(params, n, h, config.reps, rng.child(1), config.threads)
    verdicts.append(
        ks_two_sample(
            lengths,
            binned,
            "conditional-vs-binned total-length",
            min(config.alpha, EQUALITY_ALPHA),
        )
    )
    frequencies = tmrca_at_h_frequencies(
        params, h, CONDITIONAL_N_GRID, config.reps, rng.child(2), config.threads
    )
    means, ses = zip(*frequencies)
    verdicts.append(nondecreasing_test(means, ses, k, "tmrca-at-h-monotone"))
    return verdicts


SUITES: dict[str, Callable[[SuiteConfig, RngStream], list[TestVerdict]]] = {
    "distributions": distributions_suite,
    "metric-oracle": metric_oracle_suite,
    "sampler-equality": sampler_equality_suite,
    "eex": eex_suite,
    "laplace": laplace_suite,
    "length-moments": length_moments_suite,
    "stationary": stationary_suite,
    "conditional": conditional_suite,
}


def run_suite(name: str, config: SuiteConfig, rng: RngStream) -> ExperimentReport:
    """Run one named suite on ``rng`` and collect its verdicts."""
    try:
        suite = SUITES[name]
    except KeyError:
        raise ParameterError(
            f"unknown suite {name!r}; choose from {', '.join(SUITES)}"
        ) from None
    logger.info(
        "Running suite",
        extra={"suite": name, "seed": rng.seed, "reps": config.reps},
    )
    report = ExperimentReport(
        suite=name,
        seed=rng.seed,
        params=config.params.as_dict(),
        tests=tuple(suite(config, rng)),
    )
    failed = [v.name for v in report.tests if not v.passed]
    logger.info(
        "Suite finished",
        extra={"suite": name, "passed": report.passed, "failed": len(failed)},
    )
    if failed:
        logger.warning("Failed verdicts: %s", ", ".join(failed))
    return report
