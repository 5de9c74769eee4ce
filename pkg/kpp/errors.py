"""
errors.py - exceptions raised by the kpp package.

Expected scientific outcomes (a Newton run that stalls, a profile that fails
the validity checks) are statuses, not exceptions. These classes cover
misuse and numerical breakdown.
"""


class KppError(Exception):
    """Base class for every error raised by this package."""


class QuadratureError(KppError, ArithmeticError):
    """Non-finite data reached a quadrature."""


class SingularityError(KppError, ValueError):
    """A sample point coincides with a singularity."""


class RootFindingError(KppError, ArithmeticError):
    """Polished roots did not reach the requested tolerance."""

    def __init__(self, message: str, coeffs=None):
        super().__init__(message)
        self.coeffs = coeffs


class DomainError(KppError, ValueError):
    """An argument lies outside the range where a formula is valid."""


class AssemblyError(KppError, ValueError):
    """A discrete system could not be assembled (grid too small, bad data)."""


class SolverError(KppError, ArithmeticError):
    """A linear or least-squares solve broke down."""


class ScanError(KppError):
    """The existence predicate was not monotone inside a scan bracket."""

    def __init__(self, message: str, samples=None):
        super().__init__(message)
        self.samples = list(samples or [])


class TrackingError(KppError, ValueError):
    """No qualifying level crossing was found in a snapshot."""


class FitError(KppError, ValueError):
    """A least-squares fit was under-determined."""


class MonitorError(KppError, ArithmeticError):
    """A monitored functional could not be evaluated."""


class DependencyError(KppError):
    """A required upstream result is missing."""


class InstabilityError(KppError, ArithmeticError):
    """A time step produced non-finite values."""


class IntegrationError(KppError, ArithmeticError):
    """Time integration failed persistently at the smallest allowed step."""


class ComparisonError(KppError, ValueError):
    """Two profiles cannot be compared (disjoint grids)."""


class EmissionError(KppError):
    """Plot data could not be emitted because inputs are missing."""


class ConfigParseError(KppError, ValueError):
    """Run configuration text is malformed."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ConfigValidationError(KppError, ValueError):
    """A configuration key is unknown or its value is out of range."""

    def __init__(self, message: str, key: str = ""):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
