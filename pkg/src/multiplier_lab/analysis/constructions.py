"""Sharpness witnesses: the bump η, the weight w_β, the window h_β and its tensor F_β."""

import logging
import math
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, special

from multiplier_lab.core.exceptions import DomainError
from multiplier_lab.models.field_models import CoeffField, FreqBox, SampleField, TorusGrid
from multiplier_lab.models.scan_models import ScanSeries

logger = logging.getLogger(__name__)

PLATEAU_RADIUS = 1 / 8
SUPPORT_RADIUS = 1 / 4

# ξ values per Gauss-Jacobi evaluation block
_TRANSFORM_CHUNK = 512


class BetaParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: float = Field(gt=0, lt=1)
    d: int = Field(default=1, ge=1, le=2)


def _psi(t: np.ndarray) -> np.ndarray:
    positive = t > 0
    out = np.zeros_like(t, dtype=float)
    out[positive] = np.exp(-1.0 / t[positive])
    return out


def smooth_step(t: np.ndarray | float) -> np.ndarray:
    """C^∞ step: 0 for t <= 0, 1 for t >= 1, ψ(t)/(ψ(t)+ψ(1-t)) with ψ(t) = e^{-1/t}."""
    t = np.asarray(t, dtype=float)
    left, right = _psi(t), _psi(1.0 - t)
    return left / (left + right)


def bump_profile(radius: np.ndarray | float) -> np.ndarray:
    """η as a function of |x|: 1 on [0, 1/8], 0 on [1/4, ∞), η(r) = 1 - step(8r - 1)."""
    radius = np.asarray(radius, dtype=float)
    return 1.0 - smooth_step(radius / PLATEAU_RADIUS - 1.0)


def bump_eta(x: float | Sequence[float] | np.ndarray) -> float:
    """Radial bump η evaluated at a single point of ℝ^d."""
    return float(bump_profile(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float)))))


def w_beta_profile(beta: float, radius: np.ndarray | float) -> np.ndarray:
    """(1 - η(r)) + η(r) r^β."""
    radius = np.asarray(radius, dtype=float)
    eta = bump_profile(radius)
    return (1.0 - eta) + eta * radius**beta


def w_beta(p: BetaParams, grid: TorusGrid) -> SampleField:
    """Periodic weight w_β sampled on ``grid``; zero only at the origin."""
    if p.d != grid.d:
        raise DomainError(f"BetaParams.d={p.d} does not match grid d={grid.d}")
    return SampleField(grid=grid, values=w_beta_profile(p.beta, grid.radius()))


def reciprocal_power_scan(p: BetaParams, q: float, ns: list[int]) -> ScanSeries:
    """Riemann sums of |1/w_β|^{2q/(q-2)} over refinements, exact zeros excluded.

    Bounded under refinement iff q > 2d/(d - 2β).
    """
    if not q > 2:
        raise DomainError(f"q must exceed 2, got {q}")
    exponent = 2 * q / (q - 2)
    values = []
    for n in ns:
        w = np.abs(w_beta(p, TorusGrid(d=p.d, n=n)).values)
        nonzero = w > 0
        values.append(float(np.sum(w[nonzero] ** (-exponent)) / w.size))
    return ScanSeries(
        name=f"reciprocal_w{p.beta:g}_q{q:g}",
        parameters=[float(n) for n in ns],
        values=values,
        parameter_label="n",
        value_label="integral",
        metadata={"beta": p.beta, "q": q, "exponent": exponent},
    )


class HBetaWindow(BaseModel):
    """h_β(x) = (1/2 - |x|)^{β/2} on [-1/2, 1/2], zero outside."""

    model_config = ConfigDict(frozen=True)

    beta: float = Field(gt=0, lt=1)

    @property
    def half_beta(self) -> float:
        return self.beta / 2

    def __call__(self, x: np.ndarray | float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        gap = np.clip(0.5 - np.abs(x), 0.0, None)
        return np.where(np.abs(x) <= 0.5, gap**self.half_beta, 0.0)

    @property
    def value_at_zero(self) -> float:
        return 0.5**self.half_beta

    def transform_quad(self, xi: float) -> float:
        """ĥ_β(ξ) by adaptive quadrature, split at distance 1/|ξ| from the endpoint.

        With y = 1/2 - |x|, ĥ_β(ξ) = 2 ∫_0^{1/2} y^{β/2} cos(2πξ(1/2 - y)) dy.
        """
        a = self.half_beta
        if xi == 0:
            return 2 * 0.5 ** (1 + a) / (1 + a)
        omega = 2 * np.pi * abs(xi)
        split = min(1.0 / abs(xi), 0.5)

        near, _ = integrate.quad(
            lambda y: np.cos(omega * (0.5 - y)), 0.0, split, weight="alg", wvar=(a, 0.0)
        )
        far = 0.0
        if split < 0.5:
            # cos(ω/2 - ωy) = cos(ω/2) cos(ωy) + sin(ω/2) sin(ωy)
            c, _ = integrate.quad(lambda y: y**a, split, 0.5, weight="cos", wvar=omega, limit=200)
            s, _ = integrate.quad(lambda y: y**a, split, 0.5, weight="sin", wvar=omega, limit=200)
            far = np.cos(omega / 2) * c + np.sin(omega / 2) * s
        return float(2 * (near + far))

    def transform(self, xi: np.ndarray | float) -> np.ndarray:
        """ĥ_β on an array of frequencies by a Gauss-Jacobi rule on y = (1 + t)/4."""
        xi = np.asarray(xi, dtype=float)
        flat = np.abs(xi.ravel())
        if flat.size == 0:
            return np.zeros_like(xi)
        nodes_count = 64 + 3 * math.ceil(float(flat.max()))
        t, weights = special.roots_jacobi(nodes_count, 0.0, self.half_beta)
        y = (1.0 + t) / 4.0
        scale = 2 * 0.25 * 4.0 ** (-self.half_beta)
        out = np.empty_like(flat)
        for start in range(0, flat.size, _TRANSFORM_CHUNK):
            block = flat[start : start + _TRANSFORM_CHUNK]
            phase = 2 * np.pi * np.outer(block, 0.5 - y)
            out[start : start + _TRANSFORM_CHUNK] = scale * (np.cos(phase) @ weights)
        return out.reshape(xi.shape)

    def periodized(self, grid: TorusGrid) -> SampleField:
        """Samples of Σ_m h_β(x + m) on the torus; a product over axes when d = 2."""
        values = np.prod([self(c) for c in grid.coordinates()], axis=0)
        return SampleField(grid=grid, values=values)

    def periodized_coeffs(self, box: FreqBox) -> CoeffField:
        """Fourier coefficients ĥ_β(k) of the periodization, a product over axes when d = 2."""
        axis_values = self.transform(box.indices().astype(float))
        grids = np.meshgrid(*([axis_values] * box.d), indexing="ij")
        return CoeffField(box=box, coeffs=np.prod(grids, axis=0))


def h_beta(beta: float) -> HBetaWindow:
    return HBetaWindow(beta=beta)


class TensorFBeta(BaseModel):
    """F_β(x) = h_β(x_1) ... h_β(x_d)."""

    model_config = ConfigDict(frozen=True)

    beta: float = Field(gt=0, lt=1)
    d: int = Field(ge=1, le=2)

    @property
    def factor(self) -> HBetaWindow:
        return HBetaWindow(beta=self.beta)

    def __call__(self, *coords: np.ndarray | float) -> np.ndarray:
        if len(coords) != self.d:
            raise DomainError(f"F_β with d={self.d} called with {len(coords)} coordinates")
        return np.prod([self.factor(c) for c in coords], axis=0)

    def transform(self, *xis: np.ndarray | float) -> np.ndarray:
        if len(xis) != self.d:
            raise DomainError(f"F_β with d={self.d} transformed at {len(xis)} coordinates")
        factor = self.factor
        return np.prod([factor.transform(xi) for xi in xis], axis=0)

    def periodized(self, grid: TorusGrid) -> SampleField:
        return self.factor.periodized(grid)

    def periodized_coeffs(self, box: FreqBox) -> CoeffField:
        return self.factor.periodized_coeffs(box)


def tensor_F_beta(beta: float, d: int) -> TensorFBeta:
    return TensorFBeta(beta=beta, d=d)


def transform_decay_series(
    window: HBetaWindow,
    xi_min: float = 10.0,
    xi_max: float = 1e3,
    bins: int = 16,
    samples_per_bin: int = 256,
) -> ScanSeries:
    """Bin-averaged |ĥ_β(ξ)|² on geometric frequency bins.

    Averaging over each bin removes the cos² oscillation from the endpoint singularities.
    """
    edges = np.geomspace(xi_min, xi_max, bins + 1)
    centers, values = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        xi = np.linspace(lo, hi, samples_per_bin)
        centers.append(float(np.sqrt(lo * hi)))
        values.append(float(np.mean(window.transform(xi) ** 2)))
    logger.debug("transform decay: %d bins on [%g, %g]", bins, xi_min, xi_max)
    return ScanSeries(
        name=f"h_beta{window.beta:g}_decay",
        parameters=centers,
        values=values,
        parameter_label="xi",
        value_label="mean_abs_squared",
        metadata={"beta": window.beta},
    )
