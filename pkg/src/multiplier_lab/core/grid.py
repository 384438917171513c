"""Periodic sampling on the torus, DFT analysis/synthesis and discrete norms.

All functions are pure: inputs are frozen models, outputs are new models.
"""

import logging
from collections.abc import Callable

import numpy as np
import scipy.fft

from multiplier_lab.core.exceptions import BoxTooLargeError, DomainError
from multiplier_lab.models.field_models import CoeffField, FreqBox, SampleField, TorusGrid

logger = logging.getLogger(__name__)


def _check_box(box: FreqBox, grid: TorusGrid) -> None:
    if box.d != grid.d:
        raise BoxTooLargeError(f"box dimension {box.d} does not match grid dimension {grid.d}")
    if box.width > grid.n:
        raise BoxTooLargeError(
            f"box half-width N={box.N} needs 2N+1 <= n, grid has n={grid.n}"
        )


def _box_sign(box: FreqBox) -> np.ndarray:
    """(-1)^(k_1+...+k_d): the phase of e^{-2πi<k, x_0>} at x_0 = (-1/2, ...)."""
    grids = np.meshgrid(*([box.indices()] * box.d), indexing="ij")
    return np.where(sum(grids) % 2 == 0, 1.0, -1.0)


def _wrapped_index(box: FreqBox, n: int) -> tuple[np.ndarray, ...]:
    idx = box.indices() % n
    return np.ix_(*([idx] * box.d))


def analyze(f: SampleField, box: FreqBox) -> CoeffField:
    """Fourier coefficients ĉ(k) = n^{-d} Σ_j f(x_j) e^{-2πi<k,x_j>} for k in ``box``.

    Args:
        f: Samples on a torus grid.
        box: Symmetric frequency box with 2N+1 <= n.

    Returns:
        Coefficients on ``box``; exact for trigonometric polynomials of degree <= N.

    Raises:
        BoxTooLargeError: If the box cannot be resolved by the grid.
    """
    _check_box(box, f.grid)
    spectrum = scipy.fft.fftn(f.values) / f.grid.size
    coeffs = spectrum[_wrapped_index(box, f.grid.n)] * _box_sign(box)
    return CoeffField(box=box, coeffs=coeffs)


def synthesize(c: CoeffField, grid: TorusGrid) -> SampleField:
    """Samples f(x_j) = Σ_k ĉ(k) e^{2πi<k,x_j>} of the trigonometric polynomial ``c``."""
    _check_box(c.box, grid)
    spectrum = np.zeros(grid.shape, dtype=complex)
    spectrum[_wrapped_index(c.box, grid.n)] = c.coeffs * _box_sign(c.box)
    values = scipy.fft.ifftn(spectrum) * grid.size
    return SampleField(grid=grid, values=values)


def sample_function(func: Callable[..., np.ndarray], grid: TorusGrid) -> SampleField:
    """Evaluate a vectorized function of the coordinate arrays on every grid point."""
    values = np.broadcast_to(func(*grid.coordinates()), grid.shape)
    return SampleField(grid=grid, values=values)


def lq_norm_vector(x: np.ndarray, q: float) -> float:
    """Finite ℓ^q norm of an array, q in [1, ∞]."""
    if not q >= 1:
        raise DomainError(f"exponent must be >= 1, got {q}")
    magnitude = np.abs(np.asarray(x)).ravel()
    if magnitude.size == 0:
        return 0.0
    if np.isinf(q):
        return float(magnitude.max())
    peak = magnitude.max()
    if peak == 0:
        return 0.0
    # scale before powering so large q cannot overflow
    return float(peak * np.sum((magnitude / peak) ** q) ** (1.0 / q))


def lp_norm(f: SampleField, p: float) -> float:
    """Riemann-sum L^p norm (n^{-d} Σ |f(x_j)|^p)^{1/p}; p = ∞ gives the max modulus."""
    if not p >= 1:
        raise DomainError(f"exponent must be >= 1, got {p}")
    if np.isinf(p):
        return float(np.max(np.abs(f.values)))
    return lq_norm_vector(f.values, p) * f.grid.size ** (-1.0 / p)


def lq_norm(c: CoeffField, q: float) -> float:
    """Exact ℓ^q norm of the coefficients on the box."""
    return lq_norm_vector(c.coeffs, q)


def max_box(grid: TorusGrid) -> FreqBox:
    """Largest symmetric box the grid resolves."""
    return FreqBox(d=grid.d, N=(grid.n - 1) // 2)
