"""Zak transform of Gabor windows, Gabor (C_q) constants and localization scans.

Zg(x, y) = Σ_k g(x - k) e^{2πiky} is sampled at cell centres ((i + 1/2)/M, (j + 1/2)/M)
of [0, 1)². The Gabor system {e^{2πimx} g(x - n)} is an exact (C_q)-system iff the
weighted inequality D‖a‖_q <= ‖Σ a_k e_k‖_{L²_w} holds for w = |Zg|² on 𝕋², which is
estimated here on growing frequency boxes.
"""

import logging
import math
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
import scipy.fft
from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator
from scipy import integrate

from multiplier_lab.analysis.constructions import HBetaWindow
from multiplier_lab.config import CQ_STABILITY_TOL, FIT_THRESHOLDS, AscentConfig, FitThresholds
from multiplier_lab.core.exceptions import DomainError
from multiplier_lab.core.fit import (
    MIN_FIT_POINTS,
    MIN_STABILITY_POINTS,
    classify_partial_sums,
    loglog_fit,
    stability_slope,
)
from multiplier_lab.core.grid import sample_function
from multiplier_lab.models.field_models import (
    ArrayModel,
    FreqBox,
    SampleField,
    TorusGrid,
    freeze_array,
    serialize_array,
)
from multiplier_lab.models.report_models import (
    BLTReport,
    CheckFinding,
    ExponentialSystemReport,
    FindingSeverity,
    LocalizationVerdict,
    WeightedConstantEstimate,
    WeightedConstantScan,
    ZakMinimum,
    ZakReport,
)
from multiplier_lab.models.scan_models import DivergenceVerdict, ScanSeries
from multiplier_lab.operators.ascent import DEFAULT_ASCENT, conjugate_exponent
from multiplier_lab.operators.exceptions import DegenerateWeightError
from multiplier_lab.operators.multiplier import weighted_constant_estimate
from multiplier_lab.systems.exceptions import DecayCertificateError

logger = logging.getLogger(__name__)

TAIL_TOL = 1e-12
RESIDUAL_TOL = 1e-8
UNITARITY_TOL = 1e-6
ZERO_CANDIDATE_FACTOR = 10.0
DEGENERATE_MODULUS = 1e-10

DEFAULT_RADII = [2.0**j for j in range(3, 9)]
DEFAULT_STEP = {1: 1 / 8, 2: 1 / 4}


class GaborWindow(BaseModel):
    """A window g on ℝ with a decay certificate: |g| < ``tail_tol`` outside [-T, T]."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: str
    func: Callable[[np.ndarray], np.ndarray]
    T: float = Field(gt=0)
    transform: Callable[[np.ndarray], np.ndarray] | None = None
    breakpoints: tuple[float, ...] = ()
    tail_tol: float = Field(default=TAIL_TOL, gt=0)

    @property
    def terms(self) -> int:
        """K with the Zak sum truncated to |k| <= K = ⌈T⌉ + 1."""
        return math.ceil(self.T) + 1

    def __call__(self, x: np.ndarray | float) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=complex)

    def check_decay(self, samples_per_unit: int = 512) -> None:
        """Raises DecayCertificateError if |g| reaches ``tail_tol`` on the truncated range."""
        span = self.terms + 2 - self.T
        count = max(1, int(span * samples_per_unit))
        offsets = self.T + (np.arange(count) + 0.5) * span / count
        tail = float(max(np.max(np.abs(self(offsets))), np.max(np.abs(self(-offsets)))))
        if tail > self.tail_tol:
            raise DecayCertificateError(
                f"window '{self.label}': |g| = {tail:.3g} beyond T={self.T:g} exceeds "
                f"{self.tail_tol:g}; increase T"
            )

    def l2_norm(self) -> float:
        """‖g‖_{L²(ℝ)} by adaptive quadrature over [-T, T]."""
        points = [p for p in self.breakpoints if -self.T < p < self.T] or None
        value, _ = integrate.quad(
            lambda x: float(np.abs(self(x)) ** 2), -self.T, self.T, points=points, limit=200
        )
        return float(np.sqrt(value))

    @classmethod
    def from_samples(cls, samples: Any, h: float, label: str = "samples") -> "GaborWindow":
        """Piecewise-linear window through samples at -T + j h, zero outside [-T, T]."""
        values = np.asarray(samples, dtype=complex)
        if values.ndim != 1 or values.size < 2:
            raise DomainError("window samples must be a 1-d array with at least two entries")
        if not h > 0:
            raise DomainError(f"sample spacing must be positive, got {h}")
        T = (values.size - 1) * h / 2
        nodes = -T + h * np.arange(values.size)

        def func(x: np.ndarray) -> np.ndarray:
            real = np.interp(x, nodes, values.real, left=0.0, right=0.0)
            imag = np.interp(x, nodes, values.imag, left=0.0, right=0.0)
            return real + 1j * imag

        return cls(label=label, func=func, T=T)


def gaussian_window(T: float = 6.0) -> GaborWindow:
    """g(x) = e^{-πx²}, its own Fourier transform."""
    return GaborWindow(
        label="gaussian",
        func=lambda x: np.exp(-np.pi * x**2),
        T=T,
        transform=lambda xi: np.exp(-np.pi * np.asarray(xi, dtype=float) ** 2),
    )


def box_window() -> GaborWindow:
    """g = χ_[0,1), ĝ(ξ) = e^{-πiξ} sinc(ξ)."""
    return GaborWindow(
        label="box",
        func=lambda x: ((x >= 0) & (x < 1)).astype(float),
        T=1.0,
        transform=lambda xi: np.exp(-1j * np.pi * np.asarray(xi)) * np.sinc(xi),
        breakpoints=(0.0,),
    )


def h_beta_window(beta: float) -> GaborWindow:
    window = HBetaWindow(beta=beta)
    return GaborWindow(
        label=f"h_beta{beta:g}",
        func=window,
        T=0.5,
        transform=window.transform,
        breakpoints=(0.0,),
    )


# ---------------------------------------------------------------------------
# Zak transform
# ---------------------------------------------------------------------------


class ZakField(ArrayModel):
    """Zg at cell centres of [0, 1)², plus the rows at x + 1 and the columns at y + 1."""

    label: str
    M: int = Field(ge=2)
    values: np.ndarray
    shifted_x: np.ndarray
    shifted_y: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "ZakField":
        for name in ("values", "shifted_x", "shifted_y"):
            if getattr(self, name).shape != (self.M, self.M):
                raise ValueError(f"{name} must have shape ({self.M}, {self.M})")
        return self

    @field_serializer("values", "shifted_x", "shifted_y")
    def _dump(self, values: np.ndarray):
        return serialize_array(values)

    def axis(self) -> np.ndarray:
        return (np.arange(self.M) + 0.5) / self.M

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)


def zak_values(window: GaborWindow, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Truncated sum Σ_{|k|<=K} g(x - k) e^{2πiky} at arbitrary points."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    total = np.zeros(x.shape, dtype=complex)
    for k in range(-window.terms, window.terms + 1):
        total += window(x - k) * np.exp(2j * np.pi * k * y)
    return total


def _zak_rows(window: GaborWindow, M: int, shift: float) -> np.ndarray:
    """Zg(x_i + shift, y_j) on cell centres, one inverse FFT along y."""
    x = (np.arange(M) + 0.5) / M + shift
    ks = np.arange(-window.terms, window.terms + 1)
    # half-cell phase e^{πik/M} moves the FFT nodes j/M to (j + 1/2)/M
    terms = window(x[:, None] - ks[None, :]) * np.exp(1j * np.pi * ks / M)
    padded = np.zeros((M, M), dtype=complex)
    np.add.at(padded, (slice(None), ks % M), terms)
    return M * scipy.fft.ifft(padded, axis=1)


def zak_transform(window: GaborWindow, M: int, check_tail: bool = True) -> ZakField:
    """Sample Zg on an M×M cell-centred grid.

    Args:
        window: Window with a decay certificate.
        M: Samples per unit in x and y.
        check_tail: Verify the certificate first. Disable only to study truncation.

    Raises:
        DecayCertificateError: If the window is not below its tail tolerance past T.
    """
    if check_tail:
        window.check_decay()
    values = _zak_rows(window, M, 0.0)
    shifted_x = _zak_rows(window, M, 1.0)
    axis = (np.arange(M) + 0.5) / M
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    shifted_y = zak_values(window, X, Y + 1.0)
    logger.debug("zak '%s': M=%d, %d terms", window.label, M, 2 * window.terms + 1)
    return ZakField(
        label=window.label,
        M=M,
        values=freeze_array(values),
        shifted_x=freeze_array(shifted_x),
        shifted_y=freeze_array(shifted_y),
    )


def quasi_periodicity_residual(Z: ZakField) -> float:
    """max of |Zg(x+1, y) - e^{2πiy} Zg(x, y)| and |Zg(x, y+1) - Zg(x, y)|."""
    phase = np.exp(2j * np.pi * Z.axis())[None, :]
    in_x = np.max(np.abs(Z.shifted_x - phase * Z.values))
    in_y = np.max(np.abs(Z.shifted_y - Z.values))
    return float(max(in_x, in_y))


def modulus_periodicity_residual(Z: ZakField) -> float:
    return float(np.max(np.abs(np.abs(Z.shifted_x) - Z.modulus)))


def unitarity_defect(Z: ZakField, window: GaborWindow) -> float:
    """|‖Zg‖_{L²([0,1)²)} - ‖g‖_{L²(ℝ)}| with the norms computed independently."""
    zak_norm = float(np.sqrt(np.mean(Z.modulus**2)))
    return abs(zak_norm - window.l2_norm())


def zak_minimum(Z: ZakField) -> ZakMinimum:
    i, j = np.unravel_index(int(np.argmin(Z.modulus)), Z.values.shape)
    axis = Z.axis()
    return ZakMinimum(
        value=float(Z.modulus[i, j]), x=float(axis[i]), y=float(axis[j]), cell=(int(i), int(j))
    )


def zero_candidates(Z: ZakField, factor: float = ZERO_CANDIDATE_FACTOR) -> list[tuple[int, int]]:
    """Cells where |Zg| < factor × the largest neighbour difference of |Zg|."""
    modulus = Z.modulus
    continuity = max(
        float(np.max(np.abs(np.roll(modulus, 1, axis=axis) - modulus))) for axis in (0, 1)
    )
    cells = np.argwhere(modulus < factor * continuity)
    return [(int(i), int(j)) for i, j in cells]


def zak_report(window: GaborWindow, M: int, check_tail: bool = True) -> ZakReport:
    Z = zak_transform(window, M, check_tail)
    residual = quasi_periodicity_residual(Z)
    modulus_residual = modulus_periodicity_residual(Z)
    defect = unitarity_defect(Z, window)

    findings = []
    for code, value, tol in (
        ("quasi_periodicity", residual, RESIDUAL_TOL),
        ("modulus_periodicity", modulus_residual, RESIDUAL_TOL),
        ("unitarity", defect, UNITARITY_TOL),
    ):
        if value > tol:
            findings.append(
                CheckFinding(
                    code=f"{code}_violated",
                    severity=FindingSeverity.ERROR,
                    message=f"{code} residual {value:.3g} exceeds {tol:g}",
                    data={"value": value, "tolerance": tol},
                )
            )
    return ZakReport(
        passed=not findings,
        findings=findings,
        M=M,
        quasi_periodicity_residual=residual,
        modulus_periodicity_residual=modulus_residual,
        unitarity_defect=defect,
        minimum=zak_minimum(Z),
        zero_candidates=zero_candidates(Z),
    )


def min_modulus_scan(window: GaborWindow, Ms: list[int], check_tail: bool = True) -> ScanSeries:
    """min |Zg| over the cell-centred grid for each M."""
    values = [zak_minimum(zak_transform(window, M, check_tail)).value for M in Ms]
    return ScanSeries(
        name=f"zak_min_{window.label}",
        parameters=[float(M) for M in Ms],
        values=values,
        parameter_label="M",
        value_label="min_modulus",
    )


# ---------------------------------------------------------------------------
# Gabor (C_q) constant
# ---------------------------------------------------------------------------


def weight_grid_size(N: int, minimum: int = 32) -> int:
    """Smallest power of two resolving the Gram matrices of a box of half-width N."""
    return 1 << max(4 * N + 2, minimum - 1).bit_length()


def gabor_weight(window: GaborWindow, n: int, check_tail: bool = True) -> SampleField:
    """w = |Zg|² sampled on the 2-d torus grid (|Zg| is 1-periodic in x and y)."""
    if check_tail:
        window.check_decay()
    grid = TorusGrid(d=2, n=n)
    X, Y = grid.coordinates()
    return SampleField(grid=grid, values=np.abs(zak_values(window, X, Y)) ** 2)


def _check_nondegenerate(weight: SampleField, label: str) -> None:
    if np.sqrt(np.max(np.abs(weight.values))) < DEGENERATE_MODULUS:
        raise DegenerateWeightError(f"|Zg| of window '{label}' is below {DEGENERATE_MODULUS:g}")


def gabor_cq_lower_bound(
    window: GaborWindow,
    q: float,
    box: FreqBox,
    n: int | None = None,
    config: AscentConfig = DEFAULT_ASCENT,
) -> WeightedConstantEstimate:
    """Best D in D‖a‖_q <= ‖Σ a_k e_k‖_{L²_w}, w = |Zg|², on one frequency box.

    Returns:
        The full ``WeightedConstantEstimate``, not a bare float. ``value`` is the
        smallest ratio over every explicit witness, so it bounds the best D from
        above; the structured and ascent ratios and the witness label come with it.

    Raises:
        DomainError: If the box is not two-dimensional.
        DegenerateWeightError: If |Zg| is tiny everywhere.
    """
    if box.d != 2:
        raise DomainError(f"Gabor weights live on 𝕋², got a box with d={box.d}")
    weight = gabor_weight(window, n or weight_grid_size(box.N))
    _check_nondegenerate(weight, window.label)
    return weighted_constant_estimate(weight, box.N, q, config)


def weighted_constant_scan(
    estimates: list[WeightedConstantEstimate],
    q: float,
    name: str,
    tolerance: float = CQ_STABILITY_TOL,
) -> WeightedConstantScan:
    """Stable iff the log-log slope of D_N against N is >= -tolerance.

    Two boxes suffice. ``fit`` is filled from four boxes on. A constant that
    vanishes on some box leaves ``slope`` unset and counts as decay.
    """
    series = ScanSeries(
        name=name,
        parameters=[float(e.N) for e in estimates],
        values=[e.value for e in estimates],
        parameter_label="N",
        value_label="D",
        metadata={"q": q},
    )
    positive = all(v > 0 for v in series.values)
    fit = loglog_fit(series) if positive and len(series) >= MIN_FIT_POINTS else None
    slope = None
    if fit is not None:
        slope = fit.slope
    elif positive and len(series) >= MIN_STABILITY_POINTS:
        slope = stability_slope(series)
    stable = slope is not None and slope >= -tolerance
    findings = []
    if len(series) < MIN_STABILITY_POINTS:
        findings.append(
            CheckFinding(
                code="too_few_boxes",
                severity=FindingSeverity.WARNING,
                message=f"need two boxes for a slope (q={q:g})",
            )
        )
    elif not stable:
        findings.append(
            CheckFinding(
                code="constant_decays",
                severity=FindingSeverity.WARNING,
                message=f"D_N decays under box growth (q={q:g})",
                data={"slope": slope} if slope is not None else {},
            )
        )
    return WeightedConstantScan(
        passed=stable,
        findings=findings,
        q=q,
        estimates=estimates,
        series=series,
        fit=fit,
        slope=slope,
        stable=stable,
        tolerance=tolerance,
    )


def gabor_cq_scan(
    window: GaborWindow,
    q: float,
    Ns: list[int],
    n: int | None = None,
    config: AscentConfig = DEFAULT_ASCENT,
    tolerance: float = CQ_STABILITY_TOL,
) -> WeightedConstantScan:
    """D_N on the boxes {-N..N}² against one shared sampling of |Zg|²."""
    weight = gabor_weight(window, n or weight_grid_size(max(Ns)))
    _check_nondegenerate(weight, window.label)
    estimates = []
    for N in sorted(Ns):
        estimates.append(weighted_constant_estimate(weight, N, q, config))
        logger.debug("gabor '%s' q=%g N=%d: D=%.6g", window.label, q, N, estimates[-1].value)
    return weighted_constant_scan(estimates, q, f"gabor_D_{window.label}_q{q:g}", tolerance)


# ---------------------------------------------------------------------------
# localization
# ---------------------------------------------------------------------------


def localization_profile(
    func: Callable[[np.ndarray], np.ndarray],
    t: float,
    radii: Sequence[float] = DEFAULT_RADII,
    d: int = 1,
    step: float | None = None,
    name: str = "localization",
) -> ScanSeries:
    """Riemann sums of ∫_{|x|<=R} |x|^t |f(x)|² dx for every R in ``radii``.

    In d = 2 the integrand is |x|^t |f(x_1) f(x_2)|², a separable product.
    """
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if d not in (1, 2):
        raise DomainError(f"d must be 1 or 2, got {d}")
    step = step or DEFAULT_STEP[d]
    m = math.ceil(max(radii) / step)
    axis = step * np.arange(-m, m + 1)
    axis_density = np.abs(np.asarray(func(axis))) ** 2
    if d == 1:
        radius, density = np.abs(axis), axis_density
    else:
        radius = np.hypot(axis[:, None], axis[None, :])
        density = np.outer(axis_density, axis_density)
    radius, density = radius.ravel(), density.ravel()
    order = np.argsort(radius, kind="stable")
    cumulative = np.cumsum(radius[order] ** t * density[order]) * step**d
    counts = np.searchsorted(radius[order], np.asarray(radii, dtype=float), side="right")
    values = [float(cumulative[c - 1]) if c > 0 else 0.0 for c in counts]
    return ScanSeries(
        name=name,
        parameters=[float(r) for r in radii],
        values=values,
        parameter_label="R",
        value_label="integral",
        metadata={"t": t, "d": d, "step": step},
    )


def localization_verdict(
    profile: ScanSeries, side: str, t: float, thresholds: FitThresholds = FIT_THRESHOLDS
) -> LocalizationVerdict:
    """Finite when the last radius adds nothing, else by the increment exponent."""
    if profile.values[-1] == profile.values[-2]:
        return LocalizationVerdict(side=side, t=t, finite=True)
    assessment = classify_partial_sums(profile, thresholds=thresholds)
    return LocalizationVerdict(
        side=side,
        t=t,
        finite=assessment.verdict == DivergenceVerdict.CONVERGENT,
        assessment=assessment,
    )


def _side_function(window: GaborWindow, side: str) -> Callable[[np.ndarray], np.ndarray]:
    if side == "time":
        return window
    if side == "frequency":
        if window.transform is None:
            raise DomainError(f"window '{window.label}' has no Fourier transform")
        return window.transform
    raise DomainError(f"side must be 'time' or 'frequency', got {side!r}")


def localization_integral(
    window: GaborWindow, t: float, R: float, side: str = "time", step: float | None = None
) -> float:
    """∫_{|x|<=R} |x|^t |g(x)|² dx, or the same for ĝ with side='frequency'."""
    if not R > 0:
        raise DomainError(f"R must be positive, got {R}")
    profile = localization_profile(_side_function(window, side), t, [R], step=step)
    return profile.values[0]


def blt_scan(
    window: GaborWindow,
    q: float,
    ts: list[float],
    radii: Sequence[float] = DEFAULT_RADII,
    step: float | None = None,
    thresholds: FitThresholds = FIT_THRESHOLDS,
) -> BLTReport:
    """Classify time and frequency localization for every t and map the forbidden region.

    An exact (C_q) Gabor system cannot have both integrals finite at a common
    t >= 4/q', nor time exponent r and frequency exponent t with
    t >= r > 4(q-1)/(q+2) and 1/r + 1/t <= q'/2. Grid pairs violating this are
    reported in ``forbidden_pairs``.
    """
    if not q >= 2:
        raise DomainError(f"q must be >= 2, got {q}")
    q_dual = conjugate_exponent(q)
    symmetric = 4 / q_dual
    region_lower = 4.0 if np.isinf(q) else 4 * (q - 1) / (q + 2)

    verdicts = []
    finite: dict[str, list[bool]] = {}
    for side in ("time", "frequency"):
        func = _side_function(window, side)
        for t in ts:
            profile = localization_profile(
                func, t, radii, step=step, name=f"{window.label}_{side}_t{t:g}"
            )
            verdicts.append(localization_verdict(profile, side, t, thresholds))
            finite.setdefault(side, []).append(verdicts[-1].finite)
            logger.debug("blt '%s' %s t=%g: finite=%s", window.label, side, t, verdicts[-1].finite)

    forbidden = []
    for i, r in enumerate(ts):
        for j, t in enumerate(ts):
            in_region = t >= r > region_lower and 1 / r + 1 / t <= q_dual / 2 + 1e-12
            if in_region and finite["time"][i] and finite["frequency"][j]:
                forbidden.append((float(r), float(t)))
    findings = [
        CheckFinding(
            code="localization_forbidden",
            severity=FindingSeverity.WARNING,
            message=f"time t={r:g} and frequency t={t:g} both finite; "
            f"no exact (C_{q:g}) Gabor system has this localization",
            data={"r": r, "t": t},
        )
        for r, t in forbidden
    ]
    return BLTReport(
        passed=not forbidden,
        findings=findings,
        q=q,
        symmetric_threshold=symmetric,
        region_lower=region_lower,
        localization=verdicts,
        forbidden_pairs=forbidden,
    )


# ---------------------------------------------------------------------------
# weighted exponential systems
# ---------------------------------------------------------------------------


def weighted_exponential_report(
    weight_fn: Callable[..., np.ndarray],
    d: int,
    ns: list[int],
    thresholds: FitThresholds = FIT_THRESHOLDS,
) -> ExponentialSystemReport:
    """Riesz-basis and exactness verdicts for {e_k} in L²_w.

    Riesz basis iff 0 < ess inf w <= ess sup w < ∞; exact iff 1/w ∈ L¹. The ess inf
    and ess sup are followed under refinement, 1/w by its Riemann partial sums with
    exact zeros excluded.
    """
    ess_inf, ess_sup, reciprocal = [], [], []
    for n in ns:
        w = np.abs(sample_function(weight_fn, TorusGrid(d=d, n=n)).values)
        ess_inf.append(float(w.min()))
        ess_sup.append(float(w.max()))
        nonzero = w > 0
        reciprocal.append(float(np.sum(1.0 / w[nonzero]) / w.size))

    def series(name: str, values: list[float]) -> ScanSeries:
        return ScanSeries(
            name=name, parameters=[float(n) for n in ns], values=values, parameter_label="n"
        )

    if min(ess_inf) > 0:
        riesz = loglog_fit(series("ess_inf", ess_inf)).slope >= -thresholds.slope_tol
    else:
        riesz = False
    bounded_above = loglog_fit(series("ess_sup", ess_sup)).slope <= thresholds.slope_tol
    riesz = riesz and bounded_above
    assessment = classify_partial_sums(series("reciprocal", reciprocal), thresholds=thresholds)
    exact = assessment.verdict == DivergenceVerdict.CONVERGENT

    findings = [
        CheckFinding(
            code="exponential_system",
            severity=FindingSeverity.INFO,
            message=f"Riesz basis: {riesz}; exact: {exact}",
            data={"riesz_basis": riesz, "exact": exact},
        )
    ]
    return ExponentialSystemReport(
        passed=True,
        findings=findings,
        ess_inf=ess_inf,
        ess_sup=ess_sup,
        riesz_basis=riesz,
        exact=exact,
        reciprocal_assessment=assessment,
    )
