"""Exception types shared across the library."""


class VortexLabError(Exception):
    """Base class for all library-specific errors."""


class SingularInputError(VortexLabError):
    """Kernel evaluated at its singular point."""


class DomainError(VortexLabError):
    """Input outside the domain of definition of the requested quantity."""


class SupportError(VortexLabError):
    """Mollifier support does not fit inside the fundamental domain."""


class ResolutionError(VortexLabError):
    """Grid too coarse to resolve the requested feature."""


class StepRejectedError(VortexLabError):
    """Time step rejected (CFL violation); carries a suggested dt."""

    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class SolverInstabilityError(VortexLabError):
    """Solution left its admissible band; resolution too low."""


class NonContractionError(VortexLabError):
    """Fixed-point iteration failed to contract; horizon too large."""


class ConfigError(VortexLabError):
    """Invalid experiment configuration."""
