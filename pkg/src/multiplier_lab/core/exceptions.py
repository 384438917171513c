"""Grid and fitting exceptions."""


class GridError(Exception):
    """Base exception for sampling, transform and fitting operations."""


class BoxTooLargeError(GridError, ValueError):
    """Raised when a frequency box cannot be resolved by the grid."""


class DomainError(GridError, ValueError):
    """Raised when a numeric argument lies outside its domain."""


class FitError(GridError, ValueError):
    """Raised when a scan series cannot be fitted."""
