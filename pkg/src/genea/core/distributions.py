"""Closed-form functions of (beta, theta) and the depth laws of subtree maxima.

``c_theta(h)`` is the tail of the excursion height: the rate of lineages whose
subtree reaches depth ``h``. ``zeta*_delta`` is the largest depth among the
lineages attached to a stretch of length ``delta`` of the extant population:
P(zeta*_delta < h) = exp(-delta c_theta(h)).

Every function accepts scalars or numpy arrays and returns the same kind.
"""

import math
from collections.abc import Callable
from typing import overload

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.special import exp1, factorial

from genea.core.params import BranchingParams, RngStream
from genea.defaults import QUAD_ABS_TOL, QUAD_LIMIT, QUAD_REL_TOL
from genea.exceptions import ParameterError, QuadratureError
from genea.logging import logger

EULER_GAMMA: float = 0.5772156649015329
ZETA_2: float = math.pi**2 / 6

_SERIES_TERMS = 25
_ASYMPTOTIC_TERMS = 9

FloatArray = NDArray[np.float64]


@overload
def _like(value: FloatArray, template: float) -> float: ...
@overload
def _like(value: FloatArray, template: ArrayLike) -> float | FloatArray: ...
def _like(value: FloatArray, template: ArrayLike) -> float | FloatArray:
    """Return a Python float when the input was a scalar."""
    if np.ndim(template) == 0:
        return float(value)
    return value


def _positive(value: ArrayLike, name: str) -> FloatArray:
    arr = np.asarray(value, dtype=np.float64)
    # written as "not >" so that NaN is rejected too
    if np.any(~(arr > 0)):
        raise ParameterError(f"{name} must be > 0, got {value}")
    return arr


def _unit_open(value: ArrayLike) -> FloatArray:
    arr = np.asarray(value, dtype=np.float64)
    if np.any(~((arr > 0) & (arr < 1))):
        raise ParameterError(f"uniform variates must lie in (0, 1), got {value}")
    return arr


def psi(params: BranchingParams, lam: ArrayLike) -> float | FloatArray:
    """Branching mechanism psi_theta(lam) = beta lam^2 + 2 beta theta lam."""
    arr = np.asarray(lam, dtype=np.float64)
    if np.any(~(arr >= 0)):
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    value = params.beta * arr**2 + 2.0 * params.beta * params.theta * arr
    return _like(value, lam)


def c_theta(params: BranchingParams, h: ArrayLike) -> float | FloatArray:
    """Tail c_theta(h).

    1/(beta h) if theta = 0, else 2 theta / (exp(2 beta theta h) - 1).
    """
    arr = _positive(h, "h")
    if params.theta == 0:
        value = 1.0 / (params.beta * arr)
    else:
        with np.errstate(over="ignore"):
            rate = 2.0 * params.beta * params.theta
            value = 2.0 * params.theta / np.expm1(rate * arr)
    return _like(value, h)


def c_theta_prime_abs(params: BranchingParams, h: ArrayLike) -> float | FloatArray:
    """|c'_theta(h)|, the depth density of the ancestral point process."""
    params.require_finite_population("c_theta_prime_abs")
    arr = _positive(h, "h")
    x = 2.0 * params.beta * params.theta * arr
    # 4 beta theta^2 e^x / (e^x - 1)^2, rewritten with e^-x so it never overflows
    value = (
        4.0 * params.beta * params.theta**2 * np.exp(-x) / np.expm1(-x) ** 2
    )
    return _like(value, h)


def c_theta_inv(params: BranchingParams, y: ArrayLike) -> float | FloatArray:
    """Inverse of c_theta: the depth h with c_theta(h) = y."""
    params.require_finite_population("c_theta_inv")
    arr = _positive(y, "y")
    value = np.log1p(2.0 * params.theta / arr) / (2.0 * params.beta * params.theta)
    return _like(value, y)


def zeta_star_cdf(
    params: BranchingParams, delta: float, h: ArrayLike
) -> float | FloatArray:
    """P(zeta*_delta <= h) = exp(-delta c_theta(h))."""
    return _like(np.exp(-delta * np.asarray(c_theta(params, h))), h)


def zeta_star_conditioned_cdf(
    params: BranchingParams, delta: float, hmax: float, h: ArrayLike
) -> float | FloatArray:
    """P(zeta*_delta <= h | zeta*_delta <= hmax), equal to 1 from hmax on."""
    arr = np.minimum(np.asarray(h, dtype=np.float64), hmax)
    value = np.exp(-delta * (np.asarray(c_theta(params, arr)) - c_theta(params, hmax)))
    return _like(value, h)


def zeta_star_from_uniform(
    params: BranchingParams, delta: ArrayLike, u: ArrayLike
) -> float | FloatArray:
    """Inverse transform log(1 - 2 theta delta / log u) / (2 theta beta)."""
    params.require_finite_population("zeta_star_from_uniform")
    d = _positive(delta, "delta")
    uu = _unit_open(u)
    value = np.log1p(-2.0 * params.theta * d / np.log(uu)) / (
        2.0 * params.theta * params.beta
    )
    return _like(value, np.broadcast_to(u, np.broadcast(d, uu).shape))


def zeta_star_conditioned_from_uniform(
    params: BranchingParams, delta: ArrayLike, hmax: ArrayLike, u: ArrayLike
) -> float | FloatArray:
    """Inverse transform of zeta*_delta conditioned on zeta*_delta <= hmax."""
    params.require_finite_population("zeta_star_conditioned_from_uniform")
    d = _positive(delta, "delta")
    top = _positive(hmax, "hmax")
    uu = _unit_open(u)
    level = np.asarray(c_theta(params, top)) - np.log(uu) / d
    value = np.minimum(np.asarray(c_theta_inv(params, level)), top)
    return _like(value, np.broadcast_to(u, np.broadcast(d, top, uu).shape))


def _draw_shape(*arrays: FloatArray, size: int | None) -> int | tuple[int, ...] | None:
    if size is not None:
        return size
    shape = np.broadcast_shapes(*(a.shape for a in arrays))
    return shape if shape else None


def sample_zeta_star(
    params: BranchingParams,
    delta: ArrayLike,
    rng: RngStream,
    size: int | None = None,
) -> float | FloatArray:
    """Exact draws of zeta*_delta; an array ``delta`` gives one draw per entry."""
    params.require_finite_population("sample_zeta_star")
    d = _positive(delta, "delta")
    u = rng.uniform_open(_draw_shape(d, size=size))
    return zeta_star_from_uniform(params, d if np.ndim(u) else float(d), u)


def sample_zeta_star_conditioned(
    params: BranchingParams,
    delta: ArrayLike,
    hmax: ArrayLike,
    rng: RngStream,
    size: int | None = None,
) -> float | FloatArray:
    """Exact draws of zeta*_delta given zeta*_delta <= hmax; never exceeds hmax."""
    params.require_finite_population("sample_zeta_star_conditioned")
    d = _positive(delta, "delta")
    top = _positive(hmax, "hmax")
    u = rng.uniform_open(_draw_shape(d, top, size=size))
    if np.ndim(u) == 0:
        return zeta_star_conditioned_from_uniform(params, float(d), float(top), u)
    return zeta_star_conditioned_from_uniform(params, d, top, u)


def adaptive_quad(
    integrand: Callable[[float], float],
    lower: float,
    upper: float,
    what: str,
    points: list[float] | None = None,
) -> float:
    """Adaptive Gauss-Kronrod quadrature (QUADPACK) with an explicit failure."""
    extra = {"points": points} if points else {}
    result = quad(
        integrand,
        lower,
        upper,
        epsabs=QUAD_ABS_TOL,
        epsrel=QUAD_REL_TOL,
        limit=QUAD_LIMIT,
        full_output=1,
        **extra,
    )
    value, abserr = float(result[0]), float(result[1])
    if len(result) > 3:
        if abserr > max(QUAD_ABS_TOL, QUAD_ABS_TOL * abs(value)):
            raise QuadratureError(what, str(result[3]).strip())
        logger.debug(
            "Quadrature warning within tolerance",
            extra={"integral": what, "abserr": abserr},
        )
    return value


def _split_integral(
    integrand: Callable[[float], float], scale: float, what: str
) -> float:
    """Integral over (0, inf), split at 1 with a breakpoint at ``scale`` if inside."""
    points = [scale] if 0 < scale < 1 else None
    head = adaptive_quad(integrand, 0.0, 1.0, what, points)
    tail = adaptive_quad(integrand, 1.0, math.inf, what)
    return head + tail


def _require_scalar_delta(delta: float) -> float:
    if np.ndim(delta) != 0:
        raise ParameterError("delta must be a scalar for quadrature moments")
    return float(_positive(delta, "delta"))


def mean_zeta_star(params: BranchingParams, delta: float) -> float:
    """E[zeta*_delta] by quadrature of int_0^inf (1 - exp(-delta c_theta(h))) dh.

    With u = delta c_theta(h) the integral becomes
    (delta/beta) int_0^inf (1 - e^-u) du / (u (u + 2 theta delta)),
    which is regular at both ends.
    """
    params.require_finite_population("mean_zeta_star")
    d = _require_scalar_delta(delta)
    x = 2.0 * params.theta * d

    def integrand(u: float) -> float:
        return -math.expm1(-u) / (u * (u + x))

    return d / params.beta * _split_integral(integrand, x, "E[zeta*_delta]")


def second_moment_zeta_star(params: BranchingParams, delta: float) -> float:
    """E[(zeta*_delta)^2] = 2 int_0^inf h (1 - exp(-delta c_theta(h))) dh."""
    params.require_finite_population("second_moment_zeta_star")
    d = _require_scalar_delta(delta)
    x = 2.0 * params.theta * d

    def integrand(u: float) -> float:
        return math.log1p(x / u) * -math.expm1(-u) / (u * (u + x))

    scale = d / (params.beta**2 * params.theta)
    return scale * _split_integral(integrand, x, "E[(zeta*_delta)^2]")


def integral_h_c(params: BranchingParams) -> float:
    """int_0^inf h c_theta(h) dh through v = 1/(exp(2 beta theta h) - 1).

    Equals (pi^2/6) / (2 beta^2 theta).
    """
    params.require_finite_population("integral_h_c")

    def integrand(v: float) -> float:
        return math.log1p(v) / (v * (1.0 + v))

    value = _split_integral(integrand, 0.0, "int h c_theta(h) dh")
    return value / (2.0 * params.beta**2 * params.theta)


def phi(lam: float) -> float:
    """phi(lam) = lam int_0^1 (1 - v^lam) / (1 - v) dv; phi(k) = k H_k."""
    if not lam > 0:
        raise ParameterError(f"lambda must be > 0, got {lam}")

    def integrand(v: float) -> float:
        if v >= 1.0:
            return lam
        return -math.expm1(lam * math.log(v)) / (1.0 - v)

    return lam * adaptive_quad(integrand, 0.0, 1.0, "phi")


def _gamma_log_exp1(x: FloatArray) -> FloatArray:
    """gamma + log x + e^x E1(x), evaluated without cancellation on (0, inf)."""
    out = np.empty_like(x)
    small = x < 1.0
    large = x > 50.0
    middle = ~small & ~large
    if small.any():
        xs = x[small][:, None]
        k = np.arange(1, _SERIES_TERMS + 1)
        series = np.sum((-xs) ** k / (k * factorial(k)), axis=1)
        xs = xs[:, 0]
        out[small] = -np.expm1(xs) * (EULER_GAMMA + np.log(xs)) - np.exp(xs) * series
    if middle.any():
        xm = x[middle]
        out[middle] = EULER_GAMMA + np.log(xm) + np.exp(xm) * exp1(xm)
    if large.any():
        xl = x[large][:, None]
        k = np.arange(_ASYMPTOTIC_TERMS)
        asymptotic = np.sum((-1.0) ** k * factorial(k) / xl ** (k + 1), axis=1)
        out[large] = EULER_GAMMA + np.log(xl[:, 0]) + asymptotic
    return out


def mean_zeta_star_closed_form(
    params: BranchingParams, delta: ArrayLike
) -> float | FloatArray:
    """E[zeta*_delta] = (gamma + log x + e^x E1(x)) / (2 beta theta), x = 2 theta delta.

    Vectorized counterpart of ``mean_zeta_star`` for per-interval compensators.
    """
    params.require_finite_population("mean_zeta_star_closed_form")
    d = _positive(delta, "delta")
    x = np.atleast_1d(2.0 * params.theta * d)
    value = _gamma_log_exp1(x) / (2.0 * params.beta * params.theta)
    return _like(value.reshape(d.shape), delta)


def mean_zeta_star_expansion(params: BranchingParams, delta: float) -> float:
    """Small-delta expansion of the mean.

    -(delta/beta) log(2 theta delta) + (delta/beta)(1 - gamma).
    """
    params.require_finite_population("mean_zeta_star_expansion")
    d = _require_scalar_delta(delta)
    return d / params.beta * (1.0 - EULER_GAMMA - math.log(2.0 * params.theta * d))


def second_moment_zeta_star_expansion(params: BranchingParams, delta: float) -> float:
    """Small-delta expansion 2 delta int_0^inf h c_theta(h) dh."""
    d = _require_scalar_delta(delta)
    return 2.0 * d * integral_h_c(params)
