"""Exception types raised across the package."""


class GeosteinError(Exception):
    """Base class for all package errors."""


class ChartDomainError(GeosteinError, ValueError):
    """Point lies on (or too close to) the half great circle excluded by the chart."""


class EmptyPointSet(GeosteinError, ValueError):
    pass


class SeriesDivergence(GeosteinError, ArithmeticError):
    """Hypergeometric series did not reach tolerance within the term budget."""


class InvalidSmoothness(GeosteinError, ValueError):
    pass


class UnsupportedSmoothness(GeosteinError, ValueError):
    pass


class UnsupportedTarget(GeosteinError, TypeError):
    pass


class DuplicatePoints(GeosteinError, ValueError):
    pass


class FactorizationFailure(GeosteinError, ArithmeticError):
    """Stein kernel matrix could not be factorized even after the jitter cap."""


class DegenerateSystem(GeosteinError, ArithmeticError):
    pass


class LengthMismatch(GeosteinError, ValueError):
    pass


class UnknownIntegrand(GeosteinError, KeyError):
    pass


class InsufficientData(GeosteinError, ValueError):
    pass


class ConfigError(GeosteinError, ValueError):
    """Malformed kernel/target/point-regime specification."""
