"""Exception hierarchy shared by all modules."""


class ReachError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(ReachError, ValueError):
    pass


class RankDeficient(ReachError, ValueError):
    pass


class TooLarge(ReachError, ValueError):
    pass


class IndexOutOfRange(ReachError, IndexError):
    pass


class BoundViolated(ReachError, ValueError):
    pass


class SearchCapExceeded(ReachError, RuntimeError):
    """A Taylor-order search hit ``k_cap`` without satisfying its criterion."""

    def __init__(self, message, *, k_cap=None, condition_number=None):
        super().__init__(message)
        self.k_cap = k_cap
        self.condition_number = condition_number


class NotInInvertibilityDomain(ReachError, ValueError):
    """The integral of exp(sA) over [0, t] is singular for the requested t."""


class ConfigError(ReachError, ValueError):
    pass
