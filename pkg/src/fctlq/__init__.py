"""Fixed-cycle traffic-light queue: analytical solvers and simulation.

Two independent evaluation routes for the stationary overflow queue; a
contour-integral form and the classical root-based factorization, plus
generalized cycle variants, a bulk-service bound, Monte Carlo
simulation with compiled and pure-python kernels, and an exact
Markov-chain oracle for small instances.  The routes exist to check
each other; nothing in one is derived from the other.
"""

from .arrivals import ArrivalModel, FctlInstance, PowerPgf
from .classic import (
    QueueDistribution,
    cycle_profile,
    delay_distribution,
    effective_green,
    moments_root_form,
    pgf_root_form,
    pmf_root_form,
    solve_boundary,
)
from .contour import FORM_FULL_DISK, FORM_LOG_KERNEL, ContourSolution, solve_contour
from .errors import (
    CertificationError,
    ConfigError,
    ContourValidityError,
    CrossCheckError,
    FctlError,
    QuadratureError,
    SolverError,
    StabilityError,
    TruncationError,
)
from .extensions import (
    GeneralizedInstance,
    GeneralizedSolution,
    MixturePgf,
    VariantParams,
    build_variant,
    bulk_service_mean,
    bulk_service_pgf,
    solve_generalized,
)
from .roots import RootSet, certify, find_roots, lambert_roots
from . import sim

__version__ = "0.1.0"

__all__ = [
    "ArrivalModel",
    "FctlInstance",
    "PowerPgf",
    "QueueDistribution",
    "ContourSolution",
    "FORM_FULL_DISK",
    "FORM_LOG_KERNEL",
    "solve_contour",
    "RootSet",
    "find_roots",
    "certify",
    "lambert_roots",
    "solve_boundary",
    "pgf_root_form",
    "moments_root_form",
    "pmf_root_form",
    "cycle_profile",
    "effective_green",
    "delay_distribution",
    "GeneralizedInstance",
    "GeneralizedSolution",
    "MixturePgf",
    "VariantParams",
    "build_variant",
    "solve_generalized",
    "bulk_service_mean",
    "bulk_service_pgf",
    "sim",
    "FctlError",
    "ConfigError",
    "StabilityError",
    "SolverError",
    "ContourValidityError",
    "QuadratureError",
    "CertificationError",
    "TruncationError",
    "CrossCheckError",
    "__version__",
]
