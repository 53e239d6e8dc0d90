"""Tree lengths, their compensators and the law of the compensated limit.

Lambda_n is the total length of the genealogy of n sampled individuals and
L_eps the length of the whole population's genealogy above depth eps. Both
minus their conditional mean given Z0 converge to the same limit, whose
Laplace transform given Z0 = z0 is exp(2 theta z0 phi(lambda / (2 beta theta))).
"""

import csv
import math
from collections.abc import Iterable
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from genea.core.distributions import adaptive_quad, mean_zeta_star_closed_form, phi
from genea.core.params import BranchingParams, RngStream
from genea.defaults import MIN_LAPLACE_REPS
from genea.exceptions import ParameterError
from genea.harness.runner import mean_and_se, run_replicates
from genea.logging import logger
from genea.sampling.frame import SampleFrame, sample_frame, static_lengths
from genea.sampling.samplers import (
    conditional_z0_frame,
    sample_full_arrays,
    sample_full_depths,
    static_depths,
    subsample_arrays,
)

CSV_COLUMNS = ("replicate", "z0", "n_or_eps", "raw", "compensator", "compensated")


@dataclass(frozen=True, slots=True)
class LengthSummary:
    """One replicate of Lambda_n (``n_or_eps`` an int) or L_eps (a float)."""

    raw: float
    compensator: float
    z0: float
    n_or_eps: int | float
    replicate: int = 0

    @property
    def compensated(self) -> float:
        return self.raw - self.compensator

    def as_row(self) -> dict[str, int | float]:
        return {
            "replicate": self.replicate,
            "z0": self.z0,
            "n_or_eps": self.n_or_eps,
            "raw": self.raw,
            "compensator": self.compensator,
            "compensated": self.compensated,
        }


def _positive(value: float, name: str) -> float:
    if not (math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be finite and > 0, got {value}")
    return float(value)


def compensator_L_eps(params: BranchingParams, z0: float, eps: float) -> float:
    """E[L_eps | Z0 = z0] = z0 int_eps^inf c_theta.

    In closed form -(z0/beta) log(1 - exp(-2 beta theta eps)).
    """
    params.require_finite_population("compensator_L_eps")
    z0 = _positive(z0, "z0")
    eps = _positive(eps, "eps")
    x = 2.0 * params.beta * params.theta * eps
    return -z0 / params.beta * math.log(-math.expm1(-x))


def compensator_lambda_exact(params: BranchingParams, frame: SampleFrame) -> float:
    """E[Lambda_n | frame]: the sum of E[zeta*_|I_k|] over the sampled intervals."""
    params.require_finite_population("compensator_lambda_exact")
    means = mean_zeta_star_closed_form(params, static_lengths(frame))
    return math.fsum(np.atleast_1d(means))


def compensator_lambda_asymptotic(params: BranchingParams, z0: float, n: int) -> float:
    """(z0/beta) log(n / (2 theta z0)), E[Lambda_n | Z0] up to O(log(n)/n)."""
    params.require_finite_population("compensator_lambda_asymptotic")
    z0 = _positive(z0, "z0")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return z0 / params.beta * math.log(n / (2.0 * params.theta * z0))


def laplace_limit_target(params: BranchingParams, z0: float, lam: float) -> float:
    """E[exp(-lam L) | Z0 = z0] for the compensated limit L.

    Equals exp(2 theta z0 phi(lam / (2 beta theta))), the eps -> 0 limit of
    :func:`laplace_exact_target`. The 2 theta factor and the rescaled
    argument are required: without them the limit variance is not
    2 z0 int h c_theta, i.e. pi^2 / 6 at beta = theta = z0 = 1.
    """
    params.require_finite_population("laplace_limit_target")
    z0 = _positive(z0, "z0")
    lam = _positive(lam, "lambda")
    mu = lam / (2.0 * params.beta * params.theta)
    return math.exp(2.0 * params.theta * z0 * phi(mu))


def laplace_exact_target(
    params: BranchingParams, z0: float, lam: float, eps: float
) -> float:
    """E[exp(-lam (L_eps - E[L_eps | Z0])) | Z0 = z0] by the Laplace functional.

    Equals exp(z0 lam int_eps^inf (1 - exp(-lam (h - eps))) c_theta(h) dh).
    """
    params.require_finite_population("laplace_exact_target")
    z0 = _positive(z0, "z0")
    lam = _positive(lam, "lambda")
    eps = _positive(eps, "eps")
    rate = 2.0 * params.beta * params.theta

    def integrand(h: float) -> float:
        x = rate * h
        tail = 2.0 * params.theta * math.exp(-x) / -math.expm1(-x)
        return -math.expm1(-lam * (h - eps)) * tail

    head = adaptive_quad(integrand, eps, eps + 1.0, "Laplace exponent")
    rest = adaptive_quad(integrand, eps + 1.0, math.inf, "Laplace exponent")
    return math.exp(z0 * lam * (head + rest))


def truncated_length_summary(
    params: BranchingParams, z0: float, eps: float, rng: RngStream, replicate: int = 0
) -> LengthSummary:
    """One replicate of L_eps given Z0 = z0 (symmetric boundaries)."""
    zetas, _, _ = sample_full_depths(params, eps, rng, boundaries=(z0 / 2, z0 / 2))
    raw = math.fsum(zetas - eps)
    return LengthSummary(raw, compensator_L_eps(params, z0, eps), z0, eps, replicate)


def sample_length_summary(
    params: BranchingParams, z0: float, n: int, rng: RngStream, replicate: int = 0
) -> LengthSummary:
    """One replicate of Lambda_n given Z0 = z0, with the exact compensator."""
    frame = conditional_z0_frame(z0, n, rng)
    raw = math.fsum(static_depths(params, frame, rng))
    compensator = compensator_lambda_exact(params, frame)
    return LengthSummary(raw, compensator, z0, n, replicate)


def variance_L_eps(params: BranchingParams, z0: float, eps: float) -> float:
    """Var(L_eps | Z0 = z0) = 2 z0 int_eps^inf (h - eps) c_theta(h) dh.

    Increases to 2 z0 int_0^inf h c_theta(h) dh as eps decreases to 0.
    """
    params.require_finite_population("variance_L_eps")
    z0 = _positive(z0, "z0")
    eps = _positive(eps, "eps")
    rate = 2.0 * params.beta * params.theta

    def integrand(h: float) -> float:
        x = rate * h
        return (h - eps) * 2.0 * params.theta * math.exp(-x) / -math.expm1(-x)

    head = adaptive_quad(integrand, eps, eps + 1.0, "variance of L_eps")
    rest = adaptive_quad(integrand, eps + 1.0, math.inf, "variance of L_eps")
    return 2.0 * z0 * (head + rest)


def compensated_L_eps(
    params: BranchingParams,
    z0: float,
    eps: float,
    reps: int,
    rng: RngStream,
    threads: int = 1,
) -> np.ndarray:
    """Replicates of L_eps - E[L_eps | Z0] given Z0 = z0, in replicate order."""
    compensator = compensator_L_eps(params, z0, eps)

    def replicate(stream: RngStream) -> float:
        zetas, _, _ = sample_full_depths(
            params, eps, stream, boundaries=(z0 / 2, z0 / 2)
        )
        return math.fsum(zetas - eps) - compensator

    return np.asarray(run_replicates(replicate, reps, rng, threads))


def estimate_laplace_mc(
    params: BranchingParams,
    z0: float,
    lam: float,
    eps: float,
    reps: int,
    rng: RngStream,
    threads: int = 1,
) -> tuple[float, float]:
    """MC estimate of E[exp(-lam (L_eps - E[L_eps | Z0])) | Z0 = z0] and its se."""
    params.require_finite_population("estimate_laplace_mc")
    lam = _positive(lam, "lambda")
    if reps < MIN_LAPLACE_REPS:
        raise ParameterError(f"reps must be >= {MIN_LAPLACE_REPS}, got {reps}")
    values = compensated_L_eps(params, z0, eps, reps, rng, threads)
    return mean_and_se(np.exp(-lam * values))


def coupled_difference(
    params: BranchingParams, z0: float, n: int, rng: RngStream
) -> float:
    """One replicate of Lambda~_n - L~_eps on a common full process, eps = z0/(n beta).

    Lambda~_n sums the deepest depth of each of the n cells between the
    order statistics of 0, X_1..X_n; L~_eps is the truncated length of the
    same atoms.
    """
    params.require_finite_population("coupled_difference")
    z0 = _positive(z0, "z0")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    eps = z0 / (n * params.beta)
    us, zetas, e_g, e_d = sample_full_arrays(
        params, eps, rng, boundaries=(z0 / 2, z0 / 2)
    )
    frame = sample_frame(e_g, e_d, n, rng)
    _, depths = subsample_arrays(params, us, zetas, frame, eps, rng)
    return math.fsum(depths) - math.fsum(zetas - eps)


@dataclass(frozen=True, slots=True)
class CoupledMoment:
    """E[(Lambda~_n - L~_eps)^2 | Z0] estimated at eps = z0/(n beta)."""

    n: int
    eps: float
    second_moment: float
    se: float

    @property
    def scaled(self) -> float:
        """second_moment / (log(n)^2 / n), the constant C of the decay bound."""
        return self.second_moment * self.n / math.log(self.n) ** 2


def coupled_moment(
    params: BranchingParams,
    z0: float,
    n: int,
    reps: int,
    rng: RngStream,
    threads: int = 1,
) -> CoupledMoment:
    differences = run_replicates(
        partial(coupled_difference, params, z0, n), reps, rng, threads
    )
    mean, se = mean_and_se(np.square(differences))
    return CoupledMoment(n, z0 / (n * params.beta), mean, se)


@dataclass(frozen=True)
class LengthScaling:
    rows: tuple[LengthSummary, ...]
    coupled: tuple[CoupledMoment, ...]

    @property
    def fitted_c(self) -> float:
        """Smallest C with second_moment <= C log(n)^2 / n over the grid."""
        return max(moment.scaled for moment in self.coupled)

    @property
    def decreasing(self) -> bool:
        moments = [m.second_moment for m in self.coupled]
        return all(b < a for a, b in zip(moments, moments[1:]))


def length_scaling(
    params: BranchingParams,
    z0: float,
    n_grid: Iterable[int],
    reps: int,
    rng: RngStream,
    threads: int = 1,
) -> LengthScaling:
    """Per-replicate Lambda_n summaries and coupled second moments over a grid of n.

    Grid point i draws from ``rng.child(i)``; its length replicates and its
    coupled replicates use two further independent sub-streams.
    """
    params.require_finite_population("length_scaling")
    grid = [int(n) for n in n_grid]
    if any(n < 2 for n in grid):
        raise ParameterError("the n grid needs values >= 2 (log(n) must be positive)")
    rows: list[LengthSummary] = []
    coupled: list[CoupledMoment] = []
    for i, n in enumerate(grid):
        base = rng.child(i)
        summaries = run_replicates(
            partial(sample_length_summary, params, z0, n), reps, base.child(0), threads
        )
        rows.extend(
            LengthSummary(s.raw, s.compensator, s.z0, s.n_or_eps, r)
            for r, s in enumerate(summaries)
        )
        moment = coupled_moment(params, z0, n, reps, base.child(1), threads)
        coupled.append(moment)
        logger.info(
            "Length scaling grid point done",
            extra={"n": n, "reps": reps, "second_moment": moment.second_moment},
        )
    return LengthScaling(tuple(rows), tuple(coupled))


def write_length_csv(rows: Iterable[LengthSummary], path: Path) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_value(v) for k, v in row.as_row().items()})
    logger.debug("Wrote %s", path)


def write_coupled_csv(moments: Iterable[CoupledMoment], path: Path) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("n", "eps", "second_moment", "se", "scaled"))
        for m in moments:
            values = (m.eps, m.second_moment, m.se, m.scaled)
            writer.writerow((m.n, *(_csv_value(v) for v in values)))
    logger.debug("Wrote %s", path)


def _csv_value(value: int | float) -> str:
    return str(value) if isinstance(value, int) else repr(float(value))
