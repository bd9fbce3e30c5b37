"""Exception hierarchy shared by all modules."""


class HardEdgeError(Exception):
    """Base class for all package errors."""


class DomainError(HardEdgeError, ValueError):
    """Argument outside the mathematical domain of a routine."""


class DivergenceError(DomainError):
    """Quantity is infinite at the requested point."""


class ConvergenceError(HardEdgeError, ArithmeticError):
    """An adaptive procedure failed to reach its tolerance."""


class PrecisionError(HardEdgeError, ArithmeticError):
    """Interval arithmetic lost too many digits."""


class SeriesMatchError(HardEdgeError, ArithmeticError):
    """Small-argument series could not be matched to the boundary data."""


class ConfigError(HardEdgeError, ValueError):
    """Invalid job configuration."""
