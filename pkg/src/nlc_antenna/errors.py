"""Exception types raised across the package."""


class InputError(ValueError):
    """An argument violates a documented precondition."""


class DomainError(ValueError):
    """The physics has no solution for the given parameters."""


class ConfigError(ValueError):
    """A run configuration could not be parsed or validated."""


class CalibrationError(ValueError):
    pass


class NoBandwidthError(ValueError):
    pass


class SingularLayerError(ValueError):
    pass


class SolverError(RuntimeError):
    """A numerical solve did not reach its tolerance.

    ``residual`` holds the last residual norm and ``state`` (when available)
    the partially relaxed solution.
    """

    def __init__(self, message, residual=float("nan"), state=None, voltage=None):
        super().__init__(message)
        self.residual = residual
        self.state = state
        self.voltage = voltage


class StagnationError(SolverError):
    pass
