"""Exception hierarchy shared across the package.

Everything raised on a domain failure (as opposed to a plain programming
error, which stays a ValueError/TypeError) derives from ChanEmError so
callers can catch one base class.
"""


class ChanEmError(Exception):
    """Base class for all domain errors raised by this package."""


class DegenerateParametersError(ChanEmError):
    """Parameters admit no unique stationary law or sit on a forbidden zero."""


class BoundaryParameterError(ChanEmError):
    """A switch probability is exactly 0 or 1 where an interior value is required."""


class InsufficientDataError(ChanEmError):
    """The data cannot support the requested computation."""


class DegenerateObservationsError(InsufficientDataError):
    """Every observed slot carries the same state, so occupancy heuristics fail."""


class ZeroProbabilityError(ChanEmError):
    """An observed transition has probability zero under the supplied parameters."""


class EnumerationLimitError(ChanEmError):
    """A brute-force enumeration would exceed its instance-size bound."""


class AllStartsFailedError(ChanEmError):
    """Every starting point of a multi-start run failed."""


class ConfigError(ChanEmError):
    """An experiment configuration is malformed or inconsistent."""
