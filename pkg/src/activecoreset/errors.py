"""Exception hierarchy."""


class ActiveCoresetError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(ActiveCoresetError, ValueError):
    """A documented precondition does not hold (e.g. the seed is not inside an obstacle)."""


class UnboundedObstacleError(ActiveCoresetError):
    """Exponential search left ``t_max`` without exiting the obstacle."""


class DegenerateObstacleError(ActiveCoresetError):
    """Obstacle is thinner than the working precision along some direction."""

    def __init__(self, message, direction=None, width=None):
        super().__init__(message)
        self.direction = direction
        self.width = width


class DegenerateHullError(ActiveCoresetError, ValueError):
    """Point set does not affinely span the space."""


class ConvergenceError(ActiveCoresetError):
    """Iterative search hit its cap; carries the best iterate found."""

    def __init__(self, message, best=None, gap=None):
        super().__init__(message)
        self.best = best
        self.gap = gap


class OracleInconsistencyError(ActiveCoresetError):
    """A point previously reported inside now queries false."""


class FreeSpaceExhaustedError(ActiveCoresetError):
    """Nothing is left to sample from."""


class MapFileNotFoundError(ActiveCoresetError, FileNotFoundError):
    pass


class MapFormatError(ActiveCoresetError, ValueError):
    """Malformed PGM header or payload."""


class ScenarioError(ActiveCoresetError, ValueError):
    """Scenario document failed validation; message names the field or line."""
