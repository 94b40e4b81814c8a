"""Exception hierarchy shared by all modules."""


class OptomodError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(OptomodError, ValueError):
    pass


class ConfigError(InvalidParameterError):
    pass


class FixedPointError(OptomodError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class InstabilityError(OptomodError):
    """Raised when an integration diverges past the overflow guard."""

    def __init__(self, message, reason="divergence", time=float("nan")):
        super().__init__(message)
        self.reason = reason
        self.time = time


class NonConvergenceError(OptomodError):
    def __init__(self, message, gap=float("nan")):
        super().__init__(f"{message} (final closure gap {gap:.3e})")
        self.gap = gap


class NumericalFailureError(OptomodError):
    pass


class SingularityError(OptomodError):
    pass


class ThresholdError(OptomodError):
    pass
