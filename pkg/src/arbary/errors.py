"""Exception hierarchy shared by all modules."""


class ArbaryError(Exception):
    """Base class for library errors."""


class InvalidArgument(ArbaryError, ValueError):
    pass


class DegenerateInput(ArbaryError, ValueError):
    pass


class InstabilityError(ArbaryError, ValueError):
    """Raised when a reflection coefficient reaches the unit circle.

    ``stage`` is the 1-based recursion stage at which |kappa| >= 1 was found.
    """

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class ConvergenceError(ArbaryError, RuntimeError):
    """Iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message, violation=None, details=None):
        super().__init__(message)
        self.violation = violation
        self.details = details
