"""Exception hierarchy for oscue."""


class OscueError(Exception):
    """Base class for all numerical failures raised by the package."""


class InsufficientResolution(OscueError):
    pass


class OverflowRisk(OscueError):
    pass


class IllConditioned(OscueError):
    pass


class NotPositiveDefinite(OscueError):
    pass


class DegreeOutOfRange(OscueError, IndexError):
    pass


class OutOfRegime(OscueError, ValueError):
    pass


class CostCap(OscueError):
    pass


class GridTooCoarse(OscueError):
    pass


class ProbabilityOutOfRange(OscueError):
    """A Fredholm determinant left [0, 1] by more than the clamp tolerance."""
