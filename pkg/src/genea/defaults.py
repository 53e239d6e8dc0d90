"""Centralized default values for genea configuration."""

DEFAULT_BETA: float = 1.0
DEFAULT_THETA: float = 1.0
DEFAULT_N: int = 10
DEFAULT_EPS: float = 1e-4
DEFAULT_REPS: int = 10_000
DEFAULT_THREADS: int = 1
DEFAULT_SAMPLER: str = "static"
DEFAULT_FORMAT: str = "newick"
DEFAULT_N_GRID: tuple[int, ...] = (100, 1_000, 10_000)

SAMPLER_CHOICES: list[str] = ["static", "dynamic-v", "dynamic-h", "conditional", "full"]
FORMAT_CHOICES: list[str] = ["newick", "json", "csv"]
SUITE_CHOICES: list[str] = [
    "distributions",
    "metric-oracle",
    "sampler-equality",
    "eex",
    "laplace",
    "length-moments",
    "stationary",
    "conditional",
]

SPINE_LABEL: str = "S"

K_SIGMA: float = 4.0
ALPHA: float = 0.01
# Asymptotic Kolmogorov-Smirnov critical constants c(alpha).
KS_CRITICAL: dict[float, float] = {0.05: 1.358, 0.01: 1.628, 0.001: 1.949}
MIN_KS_SAMPLES: int = 100

QUAD_ABS_TOL: float = 1e-9
QUAD_REL_TOL: float = 1e-11
QUAD_LIMIT: int = 200

# Share of discarded replicates above which the EEX test refuses to conclude.
MAX_DISCARD_FRACTION: float = 1e-3

MIN_LAPLACE_REPS: int = 1_000

# Acceptance suite settings.
DISTRIBUTION_GRID: tuple[float, ...] = (0.5, 1.0, 2.0)
MOMENT_DRAWS: int = 1_000_000
METRIC_PROCESSES: int = 200
METRIC_MAX_ATOMS: int = 12
METRIC_POINTS: int = 8
METRIC_TOL: float = 1e-12
NEWICK_TOL: float = 1e-9
EQUALITY_ALPHA: float = 0.001
EQUALITY_N: tuple[int, ...] = (2, 5, 10)
EEX_EPS: float = 1e-3
STATIONARY_EPS: float = 1e-2
CONDITIONAL_EPS: float = 1e-2
CONDITIONAL_BIN: float = 0.05
CONDITIONAL_MAX_ATTEMPTS: int = 200
CONDITIONAL_N_GRID: tuple[int, ...] = (1, 5, 25, 125)
LAPLACE_Z0: tuple[float, ...] = (0.5, 1.0)
LAPLACE_LAMBDAS: tuple[float, ...] = (1.0, 2.0, 4.0)
LENGTH_N: int = 1_000
LENGTH_EPS_GRID: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
