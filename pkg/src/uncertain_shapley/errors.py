"""Exception hierarchy shared by all modules."""


class ShapleyError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ShapleyError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapacityError(ShapleyError):
    """The player count exceeds what exact enumeration supports."""


class MalformedGameError(ShapleyError, ValueError):
    """A game or noise description is incomplete or invalid."""


class UnsupportedAnalyticsError(ShapleyError):
    """The noise model does not provide the analytic quantities requested."""


class SingularFitError(ShapleyError):
    """The least-squares design matrix is rank deficient."""


class SamplerError(ShapleyError):
    """A user supplied noise sampler failed."""
