"""Exception hierarchy.

Validation problems map to CLI exit code 2, solver failures to 3 and
internal cross-check failures to 4.
"""


class UsdError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(UsdError, ValueError):
    pass


class ParseError(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class PriorsInvalid(ValidationError):
    pass


class LinearlyDependent(ValidationError):
    pass


class DimensionTooSmall(ValidationError):
    pass


class ProbabilityOutOfRange(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class IncompletePovm(ValidationError):
    pass


class SolverError(UsdError):
    pass


class IllConditioned(SolverError):
    pass


class SingularMinor(SolverError):
    pass


class NoFeasiblePhase(SolverError):
    """No phase assignment yields an interior KKT point on the support.

    The rejected candidates are kept on ``candidates`` so that callers can
    inspect box violations (the greedy reduction needs them).
    """

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)


class NoSolution(SolverError):
    pass


class TooManyAxes(SolverError):
    pass


class TooLarge(SolverError):
    pass


class CrossCheckError(UsdError, AssertionError):
    """Two independent evaluation routes disagreed beyond tolerance."""
