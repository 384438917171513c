"""Gabor and shift-invariant system exceptions."""


class SystemsError(Exception):
    """Base exception for Zak, Gramian and lattice operations."""


class DecayCertificateError(SystemsError, ValueError):
    """Raised when a window or generator exceeds the tail tolerance past its cutoff."""


class DegenerateGramianError(SystemsError):
    """Raised when a Gramian vanishes on a set that does not shrink under refinement."""


class LatticeError(SystemsError, ValueError):
    """Raised when a lattice does not strictly contain the integer lattice."""
