"""Exception hierarchy shared by all modules.

Everything raised intentionally derives from MetricLabError so the CLI can
map domain failures to exit code 1 while genuine usage errors stay at 2.
"""


class MetricLabError(Exception):
    """Base class for all intentional failures."""


class MalformedMatrixError(MetricLabError):
    """Input matrix is not a usable distance matrix (non-square, NaN, ...)."""


class DomainError(MetricLabError):
    """An operation was called outside its domain (bad index, bad parameter)."""


class ResolutionError(MetricLabError):
    """Requested mesh is too coarse to resolve a construction feature."""


class ScheduleError(MetricLabError):
    """A construction schedule violates its invariants."""


class ConstructionError(MetricLabError):
    """A geometric construction degenerates or self-intersects."""


class AlphabetError(MetricLabError):
    """A word contains letters outside the generator alphabet."""


class InsufficientDepthError(MetricLabError):
    """A truncated boundary word lost all usable depth under reduction."""


class DegenerateEnvelopeError(MetricLabError):
    """A distortion envelope cannot be inverted (flat segment)."""
