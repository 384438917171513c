"""Smoothness functionals on the torus: Ḣ^s, anisotropic Ḣ^s⃗, Slobodeckij Ẇ^{s,r},
line-restriction seminorms and Hölder quotients.

Spectral functionals read a CoeffField; difference functionals read a SampleField and
discretize the double integral as a Riemann sum over grid pairs, excluding only the
diagonal cell y = 0.
"""

import itertools
import logging
from collections.abc import Callable

import numpy as np
import scipy.fft
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import special
from scipy.spatial.distance import pdist

from multiplier_lab.analysis.exceptions import EmptyWindowError
from multiplier_lab.config import FIT_THRESHOLDS, FitThresholds
from multiplier_lab.core.exceptions import DomainError
from multiplier_lab.core.fit import classify_partial_sums
from multiplier_lab.core.grid import analyze, lp_norm, max_box, sample_function, synthesize
from multiplier_lab.core.parallel import chunked, indexed_map
from multiplier_lab.models.field_models import (
    Ball,
    CoeffField,
    FreqBox,
    SampleField,
    ScaleWindow,
    TorusGrid,
)
from multiplier_lab.models.report_models import (
    CheckFinding,
    FindingSeverity,
    MembershipReport,
)
from multiplier_lab.models.scan_models import DivergenceVerdict, ScanSeries

logger = logging.getLogger(__name__)


class SobolevParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    s: float = Field(gt=0)
    r: float = Field(gt=1)

    @field_validator("r")
    @classmethod
    def _finite(cls, r: float) -> float:
        if not np.isfinite(r):
            raise ValueError("r must be finite")
        return r

    def alpha(self, d: int) -> float:
        """Hölder-type index s - d/r."""
        return self.s - d / self.r


class AnisoParams(BaseModel):
    """Per-axis smoothness orders s⃗ = (s_1, ..., s_d)."""

    model_config = ConfigDict(frozen=True)

    s_vec: tuple[float, ...] = Field(min_length=1)

    @field_validator("s_vec")
    @classmethod
    def _positive(cls, s_vec: tuple[float, ...]) -> tuple[float, ...]:
        if any(not s > 0 for s in s_vec):
            raise ValueError(f"all orders must be positive, got {s_vec}")
        return s_vec

    @property
    def d(self) -> int:
        return len(self.s_vec)

    @property
    def ell(self) -> float:
        """ℓ(s⃗) = Σ 1/s_j."""
        return sum(1.0 / s for s in self.s_vec)

    def alpha_ell(self, axis: int) -> float:
        """α_ℓ = s_ℓ (1 - ℓ(s⃗)/2)."""
        return self.s_vec[axis] * (1.0 - self.ell / 2.0)

    @property
    def alphas(self) -> tuple[float, ...]:
        return tuple(self.alpha_ell(axis) for axis in range(self.d))


def _check_fractional(s: float) -> None:
    if not 0 < s < 1:
        raise DomainError(f"fractional order must lie in (0, 1), got {s}")


def _check_r(r: float) -> None:
    if not (r >= 1 and np.isfinite(r)):
        raise DomainError(f"integrability exponent must lie in [1, ∞), got {r}")


# ---------------------------------------------------------------------------
# spectral side
# ---------------------------------------------------------------------------


def hs_seminorm(c: CoeffField, s: float) -> float:
    """(Σ_{k≠0} |k|^{2s} |ĉ(k)|²)^{1/2} over the coefficient box."""
    if not s > 0:
        raise DomainError(f"smoothness order must be positive, got {s}")
    norms = c.box.norms()
    nonzero = norms > 0
    total = np.sum(norms[nonzero] ** (2 * s) * np.abs(c.coeffs[nonzero]) ** 2)
    return float(np.sqrt(total))


def hs_partial_sums(c: CoeffField, s: float, Ns: list[int]) -> ScanSeries:
    """Squared Ḣ^s seminorms over the nested boxes {-N..N}^d."""
    values = [hs_seminorm(c.restrict(FreqBox(d=c.d, N=N)), s) ** 2 for N in Ns]
    return ScanSeries(
        name=f"hs_partial_sums_s{s:g}",
        parameters=[float(N) for N in Ns],
        values=values,
        parameter_label="N",
        value_label="hs_squared",
        metadata={"s": s},
    )


def aniso_seminorm(c: CoeffField, p: AnisoParams) -> float:
    """(Σ (|k_1|^{2s_1} + ... + |k_d|^{2s_d}) |ĉ(k)|²)^{1/2}."""
    if p.d != c.d:
        raise DomainError(f"{p.d} orders given for a d={c.d} coefficient field")
    axes = np.meshgrid(*([c.box.indices()] * c.d), indexing="ij")
    weight = sum(np.abs(k).astype(float) ** (2 * s) for k, s in zip(axes, p.s_vec))
    return float(np.sqrt(np.sum(weight * np.abs(c.coeffs) ** 2)))


def slobodeckij_fourier_constant(s: float) -> float:
    """Constant c(s) with ‖f‖²_{Ẇ^{s,2}(ℝ)} = c(s) ∫ |ξ|^{2s} |f̂(ξ)|² dξ.

    c(s) = 2π (2π)^{2s} / (Γ(1+2s) sin πs).
    """
    _check_fractional(s)
    numerator = 2 * np.pi * (2 * np.pi) ** (2 * s)
    return float(numerator / (special.gamma(1 + 2 * s) * np.sin(np.pi * s)))


# ---------------------------------------------------------------------------
# difference side
# ---------------------------------------------------------------------------


def displacement_norms(grid: TorusGrid) -> np.ndarray:
    """|y| for the shortest torus displacement y of every index shift m."""
    m = np.arange(grid.n)
    y = ((m + grid.n // 2) % grid.n - grid.n // 2) / grid.n
    axes = np.meshgrid(*([y] * grid.d), indexing="ij")
    return np.sqrt(sum(a**2 for a in axes))


def _difference_sums_fft(values: np.ndarray) -> np.ndarray:
    """Σ_x |f(x+m) - f(x)|² for every shift m via the autocorrelation."""
    spectrum = scipy.fft.fftn(values)
    correlation = scipy.fft.ifftn(np.abs(spectrum) ** 2).real
    energy = np.sum(np.abs(values) ** 2)
    return np.maximum(2 * energy - 2 * correlation, 0.0)


def _difference_sums_roll(values: np.ndarray, r: float, workers: int) -> np.ndarray:
    """Σ_x |f(x+m) - f(x)|^r for every shift m, one roll per shift."""
    shifts = list(np.ndindex(values.shape))
    axes = tuple(range(values.ndim))

    def run(batch):
        return [
            float(np.sum(np.abs(np.roll(values, tuple(-k for k in m), axis=axes) - values) ** r))
            for m in batch
        ]

    batches = indexed_map(run, chunked(shifts, workers * 4), workers)
    return np.array(list(itertools.chain.from_iterable(batches))).reshape(values.shape)


def slobodeckij_seminorm(f: SampleField, s: float, r: float = 2.0, workers: int = 1) -> float:
    """Slobodeckij seminorm (∫∫ |f(x+y) - f(x)|^r / |y|^{d+sr} dy dx)^{1/r}.

    Args:
        f: Samples on the torus, d in {1, 2}.
        s: Fractional order in (0, 1).
        r: Integrability exponent >= 1. r = 2 uses an FFT autocorrelation.
        workers: Threads for the per-shift sums when r != 2.

    Raises:
        DomainError: If s or r lie outside their domains.
    """
    _check_fractional(s)
    _check_r(r)
    grid = f.grid
    if r == 2:
        sums = _difference_sums_fft(f.values)
    else:
        sums = _difference_sums_roll(f.values, r, workers)
    norms = displacement_norms(grid)
    off_diagonal = norms > 0
    total = np.sum(sums[off_diagonal] / norms[off_diagonal] ** (grid.d + s * r)) / grid.size**2
    return float(total ** (1.0 / r))


def _axis_difference_sums(values: np.ndarray, axis: int, r: float) -> np.ndarray:
    """Σ_x |f(x + m e_axis) - f(x)|^r for m = 0..n-1."""
    n = values.shape[axis]
    if r == 2:
        spectrum = scipy.fft.fft(values, axis=axis)
        correlation = scipy.fft.ifft(np.abs(spectrum) ** 2, axis=axis).real
        other = tuple(a for a in range(values.ndim) if a != axis)
        per_shift = np.sum(correlation, axis=other) if other else correlation
        return np.maximum(2 * np.sum(np.abs(values) ** 2) - 2 * per_shift, 0.0)
    return np.array(
        [np.sum(np.abs(np.roll(values, -m, axis=axis) - values) ** r) for m in range(n)]
    )


def line_restriction_terms(f: SampleField, s: float, r: float = 2.0) -> tuple[float, ...]:
    """Per-axis terms ∫ ‖f|_{L_i(x)}‖^r_{Ẇ^{s,r}(𝕋)} dx, one per coordinate direction."""
    _check_fractional(s)
    _check_r(r)
    n = f.grid.n
    y = np.abs(((np.arange(n) + n // 2) % n - n // 2) / n)
    terms = []
    for axis in range(f.d):
        sums = _axis_difference_sums(f.values, axis, r)
        # n^{1-d} for the average over lines, n^{-2} for the 1-d double integral
        terms.append(float(np.sum(sums[1:] / y[1:] ** (1 + s * r)) / (f.grid.size * n)))
    return tuple(terms)


def line_restriction_seminorm(f: SampleField, s: float, r: float = 2.0) -> float:
    """Σ_i ∫ ‖f|_{L_i(x)}‖^r dx, the r-th power of the line-restriction seminorm.

    In d = 1 this equals ``slobodeckij_seminorm(f, s, r) ** r``.
    """
    if f.d == 1:
        return slobodeckij_seminorm(f, s, r) ** r
    return float(sum(line_restriction_terms(f, s, r)))


def _multi_indices(d: int, order: int) -> list[tuple[int, ...]]:
    return [g for g in itertools.product(range(order + 1), repeat=d) if sum(g) == order]


def higher_slobodeckij_seminorm(
    f: SampleField, s: float, r: float = 2.0, box: FreqBox | None = None
) -> float:
    """Ẇ^{s,r} seminorm for any s > 0.

    Spectral derivatives ∂^γ f with |γ|₁ = ⌊s⌋ are taken on ``box`` (the largest box
    the grid resolves by default); the fractional seminorm of order s - ⌊s⌋ is then
    applied to each, or the L^r norm when s is an integer.
    """
    if not s > 0:
        raise DomainError(f"smoothness order must be positive, got {s}")
    order = int(np.floor(s))
    fraction = s - order
    if order == 0:
        return slobodeckij_seminorm(f, s, r)

    box = max_box(f.grid) if box is None else box
    c = analyze(f, box)
    axes = np.meshgrid(*([box.indices()] * f.d), indexing="ij")
    total = 0.0
    for gamma in _multi_indices(f.d, order):
        factor = np.prod([(2j * np.pi * k) ** g for k, g in zip(axes, gamma)], axis=0)
        derivative = synthesize(CoeffField(box=box, coeffs=c.coeffs * factor), f.grid)
        if fraction == 0:
            total += lp_norm(derivative, r) ** r
        else:
            total += slobodeckij_seminorm(derivative, fraction, r) ** r
    return float(total ** (1.0 / r))


def slobodeckij_refinement_scan(
    func: Callable[..., np.ndarray],
    d: int,
    s: float,
    r: float,
    ns: list[int],
    workers: int = 1,
) -> ScanSeries:
    """r-th power Slobodeckij seminorm of ``func`` sampled on successively finer grids."""
    values = []
    for n in ns:
        f = sample_function(func, TorusGrid(d=d, n=n))
        values.append(slobodeckij_seminorm(f, s, r, workers=workers) ** r)
        logger.debug("slobodeckij refinement n=%d: %.6g", n, values[-1])
    return ScanSeries(
        name=f"slobodeckij_s{s:g}_r{r:g}",
        parameters=[float(n) for n in ns],
        values=values,
        parameter_label="n",
        value_label="seminorm_r",
        metadata={"s": s, "r": r, "d": d},
    )


def membership_report(
    series: ScanSeries,
    quantity: str,
    expected_member: bool | None = None,
    thresholds: FitThresholds = FIT_THRESHOLDS,
) -> MembershipReport:
    """Finite iff the partial sums in ``series`` converge under refinement."""
    assessment = classify_partial_sums(series, thresholds=thresholds)
    member = assessment.verdict == DivergenceVerdict.CONVERGENT
    findings = []
    if expected_member is not None and member != expected_member:
        findings.append(
            CheckFinding(
                code="membership_mismatch",
                severity=FindingSeverity.ERROR,
                message=f"{quantity}: expected member={expected_member}, "
                f"refinement says {assessment.verdict.value}",
                data={"increment_slope": assessment.increment_fit.slope}
                if assessment.increment_fit
                else {},
            )
        )
    return MembershipReport(
        passed=not findings,
        findings=findings,
        quantity=quantity,
        assessment=assessment,
        series=series,
        expected_member=expected_member,
    )


def embedding_implies(source: SobolevParams, target: SobolevParams, d: int) -> bool:
    """True when Ẇ^{s,r} ⊂ Ẇ^{s',r'} locally: r' >= r and s - d/r >= s' - d/r'."""
    return target.r >= source.r and source.alpha(d) >= target.alpha(d)


# ---------------------------------------------------------------------------
# windowed quantities
# ---------------------------------------------------------------------------


def _relative_to(f: SampleField, ball: Ball) -> list[np.ndarray]:
    if ball.d != f.d:
        raise DomainError(f"ball has {ball.d} coordinates, field has d={f.d}")
    return [((c - x0 + 0.5) % 1.0) - 0.5 for c, x0 in zip(f.grid.coordinates(), ball.center)]


def _in_ball(relative: list[np.ndarray], radius: float) -> np.ndarray:
    return np.sqrt(sum(rel**2 for rel in relative)) <= radius * (1 + 1e-12)


def window_points(f: SampleField, ball: Ball) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates (relative to the ball center) and values of samples inside ``ball``."""
    relative = _relative_to(f, ball)
    inside = _in_ball(relative, ball.radius)
    points = np.stack([rel[inside] for rel in relative], axis=-1)
    return points, f.values[inside]


def _pair_data(f: SampleField, ball: Ball) -> tuple[np.ndarray, np.ndarray]:
    points, values = window_points(f, ball)
    if len(values) < 2:
        raise EmptyWindowError(f"window {ball} contains {len(values)} grid points")
    distances = pdist(points)
    differences = pdist(np.column_stack([values.real, values.imag]))
    return distances, differences


def _half_offsets(reach: int, d: int) -> np.ndarray:
    """Integer offsets in [-reach, reach]^d whose first nonzero component is positive."""
    span = np.arange(-reach, reach + 1)
    offsets = np.stack(np.meshgrid(*([span] * d), indexing="ij"), axis=-1).reshape(-1, d)
    nonzero = offsets != 0
    first = np.argmax(nonzero, axis=1)
    keep = np.any(nonzero, axis=1) & (offsets[np.arange(len(offsets)), first] > 0)
    return offsets[keep]


def holder_quotient(f: SampleField, alpha: float, window: ScaleWindow | None = None) -> float:
    """max |f(x) - f(y)| / |x - y|^α over the grid pairs admitted by ``window``.

    Pairs are visited one lattice offset h at a time with ``np.roll``, nearest
    offsets first, so memory stays O(n^d). Without a ball |x - y| is the torus
    distance. The sweep stops once 2·max|f - mean| / |h|^α cannot beat the best
    quotient found.

    Raises:
        EmptyWindowError: If no pair of grid points lies in the window.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"Hölder exponent must lie in (0, 1), got {alpha}")
    window = window or ScaleWindow()
    n, d = f.grid.n, f.d
    slack = 1e-9 * f.grid.spacing
    lowest = max(window.min_separation - slack, slack)
    highest = np.inf if window.max_separation is None else window.max_separation + slack

    values = f.values
    reach = n // 2
    relative: list[np.ndarray] = []
    inside: np.ndarray | None = None
    radius = 0.0
    if window.ball is not None:
        radius = window.ball.radius
        relative = _relative_to(f, window.ball)
        inside = _in_ball(relative, radius)
        if np.count_nonzero(inside) < 2:
            raise EmptyWindowError(
                f"window {window.ball} contains {np.count_nonzero(inside)} grid points"
            )
        reach = min(reach, int(np.floor(2 * radius * n)))
    if np.isfinite(highest):
        reach = min(reach, int(np.floor(highest * n)))

    offsets = _half_offsets(reach, d)
    separations = np.linalg.norm(offsets, axis=1) / n
    admitted = (separations >= lowest) & (separations <= highest)
    offsets, separations = offsets[admitted], separations[admitted]

    spread = values if inside is None else values[inside]
    oscillation = 2 * float(np.max(np.abs(spread - spread.mean())))
    best, seen = 0.0, False
    for i in np.argsort(separations, kind="stable"):
        h, separation = offsets[i], float(separations[i])
        if seen and oscillation / separation**alpha <= best:
            break
        partner = np.roll(values, tuple(-h), axis=tuple(range(d)))
        difference = np.abs(partner - values)
        if inside is not None:
            shifted = [rel + k / n for rel, k in zip(relative, h)]
            pairs = inside & _in_ball(shifted, radius)
            if not np.any(pairs):
                continue
            difference = difference[pairs]
        seen = True
        best = max(best, float(np.max(difference)) / separation**alpha)
    if not seen:
        raise EmptyWindowError(f"no grid pair with separation in the window {window}")
    return best


def holder_scan(
    f: SampleField,
    alpha: float,
    radii: list[float],
    center: tuple[float, ...] | None = None,
) -> ScanSeries:
    """Hölder quotients on the separation bands [τ/2, τ] for each τ in ``radii``."""
    values = [holder_quotient(f, alpha, ScaleWindow.band(tau, center)) for tau in radii]
    return ScanSeries(
        name=f"holder_alpha{alpha:g}",
        parameters=list(radii),
        values=values,
        parameter_label="tau",
        value_label="quotient",
        metadata={"alpha": alpha},
    )


def ball_slobodeckij_seminorm(f: SampleField, ball: Ball, s: float, r: float = 2.0) -> float:
    """(∫_B ∫_B |f(x) - f(y)|^r / |x - y|^{d+sr} dy dx)^{1/r} over grid pairs in ``ball``."""
    _check_fractional(s)
    _check_r(r)
    distances, differences = _pair_data(f, ball)
    # pdist lists each unordered pair once
    total = 2 * np.sum(differences**r / distances ** (f.d + s * r)) / f.grid.size**2
    return float(total ** (1.0 / r))


def ball_lr_norm(f: SampleField, ball: Ball, r: float = 2.0, centered: bool = False) -> float:
    """(∫_B |f - f_B|^r)^{1/r}, or of |f| itself when ``centered`` is False."""
    _check_r(r)
    _, values = window_points(f, ball)
    if len(values) == 0:
        raise EmptyWindowError(f"window {ball} contains no grid points")
    if centered:
        values = values - values.mean()
    return float((np.sum(np.abs(values) ** r) / f.grid.size) ** (1.0 / r))


# ---------------------------------------------------------------------------
# mixed Hölder
# ---------------------------------------------------------------------------


def mixed_holder_profile(
    f: SampleField, aniso: AnisoParams, axis: int, steps: list[int]
) -> ScanSeries:
    """max_x |f(x + t e_axis) - f(x)| / t^{α_axis} for t = m/n, m in ``steps``."""
    if not 0 <= axis < min(f.d, aniso.d):
        raise DomainError(f"axis {axis} out of range for d={f.d}")
    alpha = aniso.alpha_ell(axis)
    if not 0 < alpha < 1:
        raise DomainError(f"axis exponent α_{axis} = {alpha:.4f} is not in (0, 1)")
    ts, values = [], []
    for m in steps:
        t = m / f.grid.n
        diff = np.roll(f.values, -m, axis=axis) - f.values
        ts.append(t)
        values.append(float(np.max(np.abs(diff)) / t**alpha))
    return ScanSeries(
        name=f"mixed_holder_axis{axis}",
        parameters=ts,
        values=values,
        parameter_label="t",
        value_label="quotient",
        metadata={"alpha": alpha},
    )


def relative_modulus(series: ScanSeries) -> ScanSeries:
    """R(τ): each value divided by the value at the coarsest (largest) scale."""
    coarsest = series.values[int(np.argmax(series.parameters))]
    values = [v / coarsest if coarsest > 0 else 0.0 for v in series.values]
    return series.model_copy(update={"name": f"{series.name}_relative", "values": values})


def is_modulus_monotone(series: ScanSeries, tolerance: float = 0.1) -> bool:
    """True when values do not grow by more than ``tolerance`` as the scale shrinks."""
    order = np.argsort(series.parameters)[::-1]
    values = np.asarray(series.values)[order]
    return bool(np.all(values[1:] <= values[:-1] * (1 + tolerance) + 1e-15))
