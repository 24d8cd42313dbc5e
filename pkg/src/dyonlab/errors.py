"""Exception hierarchy for dyonlab."""


class DyonlabError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(DyonlabError, ValueError):
    """Argument outside the domain of a formula (non-finite, rho <= 0, ...)."""


class ConfigurationError(DyonlabError, ValueError):
    """Invalid run parameters or grid settings."""


class ExtrapolationError(DomainError):
    """Profile queried outside its grid."""


class SeriesError(DyonlabError, RuntimeError):
    """Picard iteration at the origin failed to converge."""


class StiffnessError(DyonlabError, RuntimeError):
    """Adaptive integrator step size underflowed."""


class ShootingError(DyonlabError, RuntimeError):
    """Bracketing or bisection of a shooting parameter failed."""

    def __init__(self, message, component=None, report=None):
        super().__init__(message)
        self.component = component
        self.report = report or []


class ConvergenceError(DyonlabError, RuntimeError):
    """Outer fixed-point iteration did not reach its tolerance."""

    def __init__(self, message, history=None, component=None):
        super().__init__(message)
        self.history = list(history or [])
        self.component = component


class FitError(DyonlabError, ValueError):
    """Decay fit impossible (non-positive samples in the window)."""


class UsageError(DyonlabError, ValueError):
    """Operation called on an incompatible object."""
