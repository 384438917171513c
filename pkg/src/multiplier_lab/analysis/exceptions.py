"""Exceptions for smoothness functionals, constructions and zero sets."""


class AnalysisError(Exception):
    """Base exception for analysis operations."""


class EmptyWindowError(AnalysisError, ValueError):
    """Raised when a scale window contains too few grid points."""


class ScaleResolutionError(AnalysisError, ValueError):
    """Raised when a dyadic scale is finer than the grid resolves."""


class ZeroPreconditionError(AnalysisError, ValueError):
    """Raised when a check requires a zero that the field does not have."""
