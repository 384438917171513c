"""Multiplier operator exceptions."""


class OperatorError(Exception):
    """Base exception for operator construction and norm estimation."""


class IncompatibleBoxError(OperatorError, ValueError):
    """Raised when input, output and symbol boxes do not fit together."""


class NonHermitianError(OperatorError, ValueError):
    """Raised when a matrix symbol is not Hermitian within tolerance."""


class ReconstructionError(OperatorError):
    """Raised when an eigendecomposition does not reproduce its field."""


class DegenerateWeightError(OperatorError):
    """Raised when a weight Gram matrix is not positive definite."""
