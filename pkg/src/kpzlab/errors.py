"""Exception hierarchy shared by every kpzlab module."""


class KPZLabError(Exception):
    """Base class for all library errors."""


class DomainError(KPZLabError, ValueError):
    """Argument outside the supported parameter domain."""


class PoleError(DomainError):
    """Evaluation at a pole of a meromorphic function."""


class NoBracketError(KPZLabError):
    """Root finder called on an interval without a sign change."""


class InfeasibleNestError(KPZLabError):
    """No family of nested circles satisfies the containment constraints."""


class LightConeError(KPZLabError):
    """A truncated particle system could have influenced the observable."""


class InvariantViolation(KPZLabError, AssertionError):
    """An internal invariant (ordering, interlacing, conservation) failed."""


class StepSizeError(DomainError):
    """SDE step too coarse for the requested horizon."""


class ResidualImagError(KPZLabError):
    """A quantity that must be real came out with a large imaginary part."""


class OrderTooLarge(DomainError):
    """Requested moment order exceeds what the method supports."""


class TruncationError(KPZLabError):
    """A truncated series or sum did not meet its tail bound."""


class TailError(TruncationError):
    """Probability tail or integrand tail could not be bounded."""


class ConvergenceError(KPZLabError):
    """Refinement did not stabilise within the allowed budget."""


class SingularMatrixError(KPZLabError):
    """Fredholm matrix numerically singular."""


class BranchCutError(DomainError):
    """Argument lies on a branch cut of the function being evaluated."""


class OracleMismatchError(KPZLabError):
    """Two independent evaluation routes disagree beyond tolerance."""


class CoincidentSpectralError(DomainError):
    """Spectral variables coincide where distinct values are required."""


class CoincidentPointError(DomainError):
    """Difference operator evaluated at coincident variables."""


class GridError(DomainError):
    """Evaluation grid is malformed or too coarse."""


class ResolutionError(KPZLabError):
    """Sample discreteness too coarse for the requested comparison."""


class ConfigError(KPZLabError):
    """Malformed or unknown configuration (CLI exit code 2)."""
