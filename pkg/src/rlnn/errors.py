"""Exception types raised by the library."""


class RlnnError(Exception):
    """Base class for library errors."""


class NotPositiveSemiDefinite(RlnnError, ValueError):
    pass


class MissingField(RlnnError, ValueError):
    pass


class DimensionMismatch(RlnnError, ValueError):
    pass


class InputSpaceMismatch(RlnnError, ValueError):
    pass


class InvalidSchedule(RlnnError, ValueError):
    pass


class StalePortfolio(RlnnError, ValueError):
    """Raised when valuing a hedge portfolio after its maturity."""


class ScheduleMisaligned(RlnnError, ValueError):
    pass
