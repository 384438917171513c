"""Shared builders for the test suite."""

import numpy as np

from multiplier_lab.models.field_models import CoeffField, FreqBox
from multiplier_lab.models.scan_models import ScanSeries


def dyadic(first: int, last: int) -> list[float]:
    """2^-first, ..., 2^-last."""
    return [2.0**-j for j in range(first, last + 1)]


def power_series(exponent: float, params: list[float], scale: float = 1.0) -> ScanSeries:
    return ScanSeries(
        name=f"power_{exponent:g}",
        parameters=params,
        values=[scale * p**exponent for p in params],
    )


def random_coeffs(box: FreqBox, seed: int = 7) -> CoeffField:
    rng = np.random.default_rng(seed)
    return CoeffField(
        box=box, coeffs=rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)
    )
