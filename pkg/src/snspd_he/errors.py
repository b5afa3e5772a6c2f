"""Exception types shared across the package."""


class SnspdError(Exception):
    """Base class for all package errors."""


class DomainError(SnspdError, ValueError):
    """An input lies outside the domain where a relation is defined."""


class StabilityError(SnspdError, ArithmeticError):
    """A time integration produced non-finite temperatures."""


class BracketError(SnspdError, ValueError):
    """A bisection bracket does not straddle the transition."""


class FitError(SnspdError, RuntimeError):
    """A least-squares fit failed or produced an unphysical result."""


class ConfigError(SnspdError, ValueError):
    """A scenario configuration file is malformed."""
