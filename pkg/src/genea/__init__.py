"""genea: exact genealogies of a stationary quadratic branching population."""

__version__ = "0.1.0"
