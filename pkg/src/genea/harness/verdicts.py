"""Fixed-threshold statistical verdicts."""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.stats
from numpy.typing import ArrayLike

from genea.defaults import ALPHA, K_SIGMA, KS_CRITICAL, MIN_KS_SAMPLES
from genea.exceptions import HarnessError
from genea.harness.runner import mean_and_se


@dataclass(frozen=True, slots=True)
class TestVerdict:
    """A statistic and its threshold; passes iff statistic <= threshold."""

    __test__ = False

    name: str
    statistic: float
    threshold: float
    n_samples: int
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.statistic <= self.threshold)

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "n_samples": self.n_samples,
            "pass": self.passed,
            "details": self.details,
        }


def _critical(alpha: float) -> float:
    """c(alpha) from the table, else the Smirnov limit sqrt(-ln(alpha / 2) / 2)."""
    if alpha in KS_CRITICAL:
        return KS_CRITICAL[alpha]
    largest = max(KS_CRITICAL)
    if not 0 < alpha <= largest:
        raise HarnessError(f"alpha must lie in (0, {largest}], got {alpha}")
    return math.sqrt(-math.log(alpha / 2.0) / 2.0)


def _sample(values: ArrayLike, minimum: int, what: str) -> np.ndarray:
    data = np.asarray(values, dtype=np.float64).ravel()
    if data.size < minimum:
        raise HarnessError(f"{what} needs at least {minimum} samples, got {data.size}")
    if not np.all(np.isfinite(data)):
        raise HarnessError(f"{what} got non-finite samples")
    return data


def ks_one_sample(
    samples: ArrayLike,
    cdf: Callable[[np.ndarray], ArrayLike],
    name: str = "ks-one-sample",
    alpha: float = ALPHA,
) -> TestVerdict:
    """Kolmogorov-Smirnov distance to ``cdf`` against c(alpha)/sqrt(n)."""
    data = _sample(samples, MIN_KS_SAMPLES, name)
    result = scipy.stats.kstest(data, lambda x: np.asarray(cdf(x)))
    threshold = _critical(alpha) / math.sqrt(data.size)
    return TestVerdict(
        name, float(result.statistic), threshold, int(data.size), {"alpha": alpha}
    )


def ks_two_sample(
    a: ArrayLike,
    b: ArrayLike,
    name: str = "ks-two-sample",
    alpha: float = ALPHA,
) -> TestVerdict:
    """Two-sample KS distance against c(alpha) sqrt((m + n) / (m n))."""
    first = _sample(a, MIN_KS_SAMPLES, name)
    second = _sample(b, MIN_KS_SAMPLES, name)
    m, n = first.size, second.size
    statistic = float(scipy.stats.ks_2samp(first, second).statistic)
    threshold = _critical(alpha) * math.sqrt((m + n) / (m * n))
    return TestVerdict(name, statistic, threshold, int(m + n), {"alpha": alpha, "m": m})


def moment_test(
    samples: ArrayLike,
    target: float,
    k_sigma: float = K_SIGMA,
    name: str = "moment",
    floor: float = 0.0,
) -> TestVerdict:
    """|mean - target| against max(k_sigma * se, floor).

    ``floor`` admits a known deterministic bias, e.g. an O(log(n)/n) remainder.
    """
    data = _sample(samples, 2, name)
    mean, se = mean_and_se(data)
    return TestVerdict(
        name,
        abs(mean - target),
        max(k_sigma * se, floor),
        int(data.size),
        {"mean": mean, "se": se, "target": target, "k_sigma": k_sigma},
    )


def correlation_test(
    a: ArrayLike,
    b: ArrayLike,
    k_sigma: float = K_SIGMA,
    name: str = "correlation",
) -> TestVerdict:
    """|Pearson r| against k_sigma/sqrt(n), its standard error under independence."""
    first = _sample(a, 3, name)
    second = _sample(b, 3, name)
    if first.size != second.size:
        raise HarnessError(f"{name} needs paired samples of equal size")
    r = float(np.corrcoef(first, second)[0, 1])
    if math.isnan(r):
        raise HarnessError(f"{name}: correlation undefined for a constant sample")
    threshold = k_sigma / math.sqrt(first.size)
    return TestVerdict(name, abs(r), threshold, int(first.size), {"r": r})


def tolerance_test(
    value: float, target: float, tolerance: float, name: str = "tolerance"
) -> TestVerdict:
    """Deterministic check |value - target| <= tolerance."""
    return TestVerdict(
        name, abs(value - target), tolerance, 0, {"value": value, "target": target}
    )


def nondecreasing_test(
    means: ArrayLike,
    ses: ArrayLike,
    k_sigma: float = K_SIGMA,
    name: str = "nondecreasing",
) -> TestVerdict:
    """Largest drop between consecutive estimates beyond k_sigma combined se."""
    values = np.asarray(means, dtype=np.float64).ravel()
    errors = np.asarray(ses, dtype=np.float64).ravel()
    if values.size < 2 or values.size != errors.size:
        raise HarnessError(f"{name} needs two or more estimates, each with an se")
    drops = values[:-1] - values[1:] - k_sigma * np.hypot(errors[:-1], errors[1:])
    return TestVerdict(
        name,
        float(drops.max()),
        0.0,
        int(values.size),
        {"means": values.tolist(), "se": errors.tolist(), "k_sigma": k_sigma},
    )


def all_passed(verdicts: Sequence[TestVerdict]) -> bool:
    return all(v.passed for v in verdicts)
