"""Exception hierarchy for genea."""


class GeneaError(Exception):
    """Base class for every error raised by genea."""


class ParameterError(GeneaError, ValueError):
    """A precondition on a numeric argument is violated."""


class DegenerateThetaError(ParameterError):
    """theta = 0 passed where the population size must be finite."""

    def __init__(self, operation: str) -> None:
        super().__init__(
            f"{operation} requires theta > 0: with theta = 0 the extant "
            "population is a.s. infinite"
        )
        self.operation = operation


class QuadratureError(GeneaError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, integral: str, detail: str) -> None:
        super().__init__(f"quadrature of {integral} failed: {detail}")
        self.integral = integral
        self.detail = detail


class SamplerInvariantError(GeneaError, AssertionError):
    """A sampler reached a state its construction rules out."""


class InterlacingError(SamplerInvariantError):
    """The dynamic-V sampler broke the X/V interlacing order."""

    def __init__(self, step: int, xs: list[float], vs: list[float]) -> None:
        super().__init__(
            f"interlacing violated after step {step}: X order statistics {xs}, "
            f"V order statistics {vs}"
        )
        self.step = step
        self.xs = xs
        self.vs = vs


class TreeIndexError(GeneaError, IndexError):
    """An atom index or tree point does not address the process."""


class HarnessError(GeneaError):
    """A statistical test cannot be evaluated on the data it was given."""


class ConfigError(GeneaError):
    """A configuration file or run configuration is inconsistent."""
