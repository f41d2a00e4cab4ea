"""Exception hierarchy shared by all modules."""


class HenonError(Exception):
    """Base class for every error raised by the package."""


class DomainError(HenonError, ValueError):
    """Parameters outside the admissible range."""


class SingularDiagonal(HenonError, ValueError):
    """Pointwise kernel requested on the diagonal r == rho."""


class MeshTooCoarse(HenonError, ValueError):
    pass


class MeshMismatch(HenonError, ValueError):
    pass


class RegularizationRequired(HenonError, ValueError):
    """p < 2 needs a positive flux regularization."""


class InvalidInit(HenonError, ValueError):
    pass


class NotConverged(HenonError, RuntimeError):
    """Iteration cap reached. ``state`` holds the partial result."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class RescaleFailed(HenonError, RuntimeError):
    pass


class UnsupportedExponent(HenonError, ValueError):
    pass


class DimensionError(HenonError, ValueError):
    pass


class NotFound(HenonError, RuntimeError):
    """No sign change of the second-variation gap in the scanned range."""

    def __init__(self, message, sweep=None):
        super().__init__(message)
        self.sweep = sweep


class ExponentTooSmall(HenonError, ValueError):
    pass


class RegimeRefusal(HenonError, ValueError):
    """Solve requested outside the existence regime without override."""


class ConfigError(HenonError, ValueError):
    pass
