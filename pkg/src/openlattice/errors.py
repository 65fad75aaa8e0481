class OpenLatticeError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(OpenLatticeError, ValueError):
    """An argument lies outside the domain of an operation."""


class NumericalError(OpenLatticeError, ArithmeticError):
    """A numerical routine failed to converge or produced an invalid result."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ResourceError(OpenLatticeError):
    """A problem exceeds the configured dimension cap."""


class HypothesisViolation(OpenLatticeError):
    """A premise required by an experiment does not hold for the given model."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
