"""Exception hierarchy shared across the solver modules.

The CLI maps these onto exit codes: ConfigError -> 2, CrossCheckError -> 4,
any other FctlError -> 3.
"""


class FctlError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(FctlError, ValueError):
    """Invalid model parameters, instance definition, or CLI configuration."""


class StabilityError(ConfigError):
    """The instance violates the stability condition c*E[Y] < g."""


class SolverError(FctlError, RuntimeError):
    """A numerical routine failed to reach its advertised guarantee."""


class ContourValidityError(SolverError):
    """A contour-integral representation was evaluated outside its validity set."""


class QuadratureError(SolverError):
    """Quadrature refinement hit the node budget before converging.

    Carries the last two estimates so callers can inspect how far apart
    they were.
    """

    def __init__(self, message, last=None, prev=None, nodes=None):
        super().__init__(message)
        self.last = last
        self.prev = prev
        self.nodes = nodes


class CertificationError(SolverError):
    """Root finding could not produce a certified root set."""


class TruncationError(SolverError):
    """A distribution truncation exceeded its hard cap before the tail target."""


class CrossCheckError(FctlError, RuntimeError):
    """Two independent computation routes disagreed beyond tolerance."""
