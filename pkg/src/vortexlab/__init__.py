"""Numerical laboratory for the 2D vortex particle system on the torus.

Implements the interacting particle system, its mean-field limit PDE, and
the estimators and inequality checks used to verify the propagation-of-
chaos behavior at desk scale.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainError,
    NonContractionError,
    ResolutionError,
    SingularInputError,
    SolverInstabilityError,
    StepRejectedError,
    SupportError,
    VortexLabError,
)
from .meanfield import GridField, InitialDensity, initial_density

__all__ = [
    "ConfigError",
    "DomainError",
    "GridField",
    "InitialDensity",
    "NonContractionError",
    "ResolutionError",
    "SingularInputError",
    "SolverInstabilityError",
    "StepRejectedError",
    "SupportError",
    "VortexLabError",
    "initial_density",
    "__version__",
]
