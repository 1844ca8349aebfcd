"""Exception hierarchy with named diagnostics and CLI exit codes.

Every failure path carries a machine-readable ``code`` attribute so the CLI
can exit with the documented status (0 ok, 2 assumption violation,
3 numerical failure, 4 I/O) and name the violated clause.
"""

EXIT_OK = 0
EXIT_ASSUMPTION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class DelayHinfError(Exception):
    """Base class for all library errors."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        #: short machine-readable tag, e.g. "A.1(b)" or "corollary-3"
        self.diagnostic = diagnostic or self.__class__.__name__


class AssumptionViolation(DelayHinfError):
    """An A.1-A.4 style admissibility clause failed; no synthesis attempted."""

    exit_code = EXIT_ASSUMPTION


class UnsupportedPlantError(AssumptionViolation):
    """Neither numerator nor denominator family admits the factorization."""


class DegenerateInputError(DelayHinfError):
    """Structurally invalid input (zero polynomial, empty system, ...)."""


class DomainError(DelayHinfError):
    """Argument outside the documented domain of an operation."""


class MismatchError(DelayHinfError):
    """Requested pole/zero set does not match the function's actual roots."""


class InfeasibleError(DelayHinfError):
    """A positivity or solvability precondition fails (spectral factor, rho)."""


class NumericalError(DelayHinfError):
    """Resolution failure of an adaptive numerical procedure."""


class ResolutionError(NumericalError):
    """Winding-count / contour refinement did not stabilize."""


class NonOptimalGammaError(DelayHinfError):
    """Interpolation system singular or construction invalid at this gamma."""


class OracleMismatchError(DelayHinfError):
    """Synthesized cost disagrees with the finite-dimensional oracle."""


class WellPosednessError(DelayHinfError):
    """Closed loop ill-posed on the evaluation grid."""


class IOFormatError(DelayHinfError):
    """Problem-file or CSV parsing failure."""

    exit_code = EXIT_IO
