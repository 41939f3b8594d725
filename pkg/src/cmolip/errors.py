"""Exception hierarchy.

Two families matter to callers (and to the command line exit codes):
``ValidationError`` for bad arguments or inconsistent parameters, and
``NumericError`` for requests the grid cannot honour (cube outside the
domain, scale below one cell, no admissible construction).
"""


class CmolipError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CmolipError, ValueError):
    """Inputs violate a documented precondition."""


class ArgumentError(ValidationError):
    """An argument is out of range or inconsistent with the others."""


class CapacityError(ValidationError):
    """A requested cube family would exceed the size limit."""


class NumericError(CmolipError, ArithmeticError):
    """The computation cannot be carried out on the given grid."""


class DomainError(NumericError):
    """A cube or point lies outside the sampled domain."""


class ResolutionError(NumericError):
    """A cube is smaller than one grid cell."""


class ScaleUnresolvableError(NumericError):
    """No admissible scale indices exist within the grid range."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ConstructionError(NumericError):
    """A test-set construction found no admissible placement."""


class PreconditionError(NumericError):
    """A quantitative precondition (for instance an oscillation floor) fails."""
