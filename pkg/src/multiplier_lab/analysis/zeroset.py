"""Generalized zero sets, their box-counting dimension and the local estimates that
turn a positive-dimensional zero set into a multiplier obstruction.

A point x belongs to the generalized zero set Σ(w) when the average of |w| over the
cube of side τ centred at x tends to zero with τ. On a grid this is tested scale by
scale: at τ = 2^{-j} the centred averages are compared with ε_j = C₀ 2^{-jθ}, and the
cells of side τ holding a sub-threshold point are counted. The slope of log N_j
against j log 2 is a box-counting estimate, used in place of the Hausdorff
dimension.
"""

import logging
from collections.abc import Callable

import numpy as np
from scipy import ndimage

from multiplier_lab.analysis.exceptions import ScaleResolutionError, ZeroPreconditionError
from multiplier_lab.analysis.sobolev import ball_lr_norm, ball_slobodeckij_seminorm
from multiplier_lab.config import FIT_THRESHOLDS, FitThresholds
from multiplier_lab.core.exceptions import DomainError, FitError
from multiplier_lab.core.fit import MIN_FIT_POINTS, loglog_fit
from multiplier_lab.core.grid import analyze, max_box, synthesize
from multiplier_lab.core.parallel import indexed_map
from multiplier_lab.models.field_models import Ball, CoeffField, SampleField
from multiplier_lab.models.report_models import (
    CheckFinding,
    FindingSeverity,
    HausdorffScanReport,
    HausdorffScanRow,
    PoincareReport,
    ZeroSetEstimate,
)
from multiplier_lab.models.scan_models import ExponentFit, ScanSeries
from multiplier_lab.operators.multiplier import ZERO_TOL, tau_scan_report

logger = logging.getLogger(__name__)

# ε_j = C0_FACTOR · mean|w| · 2^{-jθ} unless C₀ is given
C0_FACTOR = 1.0
MIN_CELL_SAMPLES = 2

# largest ball radius used by the windowed seminorm sums
BALL_MAX_RADIUS = 1 / 16
MAX_BALLS = 8
CROSS_CHECK_MAX_TAU = 1 / 8


# ---------------------------------------------------------------------------
# zero set
# ---------------------------------------------------------------------------


def _check_scales(w: SampleField, scales: list[int]) -> None:
    if not scales:
        raise DomainError("at least one dyadic scale is required")
    if any(j < 0 for j in scales) or list(scales) != sorted(set(scales)):
        raise DomainError(f"scales must be distinct nonnegative increasing integers, got {scales}")
    finest = max(scales)
    if 2**finest * MIN_CELL_SAMPLES > w.grid.n:
        raise ScaleResolutionError(
            f"scale 2^-{finest} needs {MIN_CELL_SAMPLES} samples per axis, grid has n={w.grid.n}"
        )


def local_averages(w: SampleField, j: int) -> np.ndarray:
    """Average of |w| over the periodic cube of side 2^{-j} centred at each grid point."""
    size = w.grid.n >> j
    return ndimage.uniform_filter(np.abs(w.values), size=size, mode="wrap")


def _candidate_cells(mask: np.ndarray, size: int) -> list[tuple[int, ...]]:
    if not mask.any():
        return []
    cells = np.unique(np.argwhere(mask) // size, axis=0)
    return [tuple(int(i) for i in cell) for cell in cells]


def _occupancy(cells: list[tuple[int, ...]], per_axis: int, d: int) -> np.ndarray:
    grid = np.zeros((per_axis,) * d, dtype=bool)
    if cells:
        grid[tuple(np.asarray(cells).T)] = True
    return grid


def _is_nested(
    coarse: list[tuple[int, ...]], fine: list[tuple[int, ...]], j_coarse: int, j_fine: int, d: int
) -> bool:
    """Every fine cell's ancestor lies within one coarse cell of a coarse candidate."""
    if not fine:
        return True
    occupied = _occupancy(coarse, 2**j_coarse, d)
    dilated = occupied.copy()
    for shift in np.ndindex(*(3,) * d):
        dilated |= np.roll(occupied, tuple(k - 1 for k in shift), axis=tuple(range(d)))
    parents = np.asarray(fine) >> (j_fine - j_coarse)
    return bool(np.all(dilated[tuple(parents.T)]))


def generalized_zero_set(
    w: SampleField,
    scales: list[int],
    theta: float,
    c0: float | None = None,
) -> ZeroSetEstimate:
    """Box-counting estimate of the generalized zero set of w.

    Args:
        w: Sampled weight.
        scales: Dyadic levels j (τ = 2^{-j}), increasing.
        theta: Decay exponent of the threshold schedule ε_j = C₀ 2^{-jθ}.
        c0: Threshold prefactor; ``C0_FACTOR · mean|w|`` by default.

    Returns:
        ZeroSetEstimate with the candidate cells, their counts, the fitted dimension
        (when at least four scales have candidates) and the nesting and
        count-monotonicity flags.

    Raises:
        ScaleResolutionError: If a scale holds fewer than two samples per axis.
    """
    if theta < 0:
        raise DomainError(f"theta must be nonnegative, got {theta}")
    _check_scales(w, scales)
    d = w.d
    c0 = C0_FACTOR * float(np.mean(np.abs(w.values))) if c0 is None else c0

    taus, thresholds, counts, candidates = [], [], [], []
    for j in scales:
        averages = local_averages(w, j)
        eps = c0 * 2.0 ** (-j * theta)
        # an identically vanishing average is a zero at every threshold
        cells = _candidate_cells((averages < eps) | (averages == 0), w.grid.n >> j)
        taus.append(2.0**-j)
        thresholds.append(eps)
        counts.append(len(cells))
        candidates.append(cells)
        logger.debug("zero set j=%d: eps=%.4g, %d candidate cells", j, eps, len(cells))

    nested = all(
        _is_nested(candidates[k], candidates[k + 1], scales[k], scales[k + 1], d)
        for k in range(len(scales) - 1)
    )
    # a cell splits into 2^d children; the neighbours of a boundary cell may join
    count_monotone = all(
        counts[k + 1] <= 2 ** (d * (scales[k + 1] - scales[k])) * counts[k] + 3**d
        for k in range(len(scales) - 1)
    )
    empty_at_fine_scales = all(c == 0 for c in counts[len(counts) // 2 :])

    fit, dimension = None, None
    occupied = [(2.0**j, c) for j, c in zip(scales, counts) if c > 0]
    if len(occupied) >= MIN_FIT_POINTS:
        fit = loglog_fit(
            ScanSeries(
                name="box_count",
                parameters=[p for p, _ in occupied],
                values=[float(c) for _, c in occupied],
                parameter_label="inverse_scale",
                value_label="count",
            )
        )
        dimension = float(np.clip(fit.slope, 0.0, d))
    if not nested or not count_monotone:
        logger.warning(
            "zero set: nested=%s, count_monotone=%s across scales %s",
            nested, count_monotone, scales,
        )
    return ZeroSetEstimate(
        scales=list(scales),
        taus=taus,
        thresholds=thresholds,
        counts=counts,
        candidates=candidates,
        fit=fit,
        dimension=dimension,
        nested=nested,
        count_monotone=count_monotone,
        empty_at_fine_scales=empty_at_fine_scales,
    )


def cell_center(cell: tuple[int, ...], tau: float) -> tuple[float, ...]:
    """Centre of candidate cell ``cell`` at scale τ in the chart [-1/2, 1/2)^d."""
    return tuple(-0.5 + (i + 0.5) * tau for i in cell)


# ---------------------------------------------------------------------------
# Poincaré-type localization
# ---------------------------------------------------------------------------


def _check_zero_at(f: SampleField, center: tuple[float, ...], zero_tol: float) -> None:
    magnitude = np.abs(f.values)
    value = magnitude[f.grid.nearest_index(center)]
    if value > zero_tol * max(magnitude.max(), np.finfo(float).tiny):
        raise ZeroPreconditionError(
            f"|f| at {center} is {value:.3g}, not below {zero_tol:g}·max|f|"
        )


def _gradient_field(f: SampleField) -> list[SampleField]:
    box = max_box(f.grid)
    c = analyze(f, box)
    axes = np.meshgrid(*([box.indices()] * f.d), indexing="ij")
    return [
        synthesize(CoeffField(box=box, coeffs=c.coeffs * 2j * np.pi * k), f.grid) for k in axes
    ]


def _ball_seminorm(f: SampleField, ball: Ball, s: float, r: float) -> float:
    if s < 1:
        return ball_slobodeckij_seminorm(f, ball, s, r)
    terms = [ball_lr_norm(g, ball, r) ** r for g in _gradient_field(f)]
    return float(sum(terms) ** (1.0 / r))


def poincare_check(
    f: SampleField,
    balls: list[Ball],
    s: float,
    r: float = 2.0,
    zero_tol: float = ZERO_TOL,
    thresholds: FitThresholds = FIT_THRESHOLDS,
    workers: int = 1,
) -> PoincareReport:
    """‖f‖_{L^r(B)} / (τ^s ‖f‖_{Ẇ^{s,r}(B)}) on balls centred at zeros of f.

    The ratios pass when they stay bounded as the radii shrink, i.e. when the fitted
    log-log slope against the radius is at least -slope_tol. Balls sharing a radius
    are reduced to their largest ratio. Balls wrap periodically.

    Raises:
        ZeroPreconditionError: If a ball is not centred at a zero of f.
    """
    if not 0 < s <= 1:
        raise DomainError(f"s must lie in (0, 1], got {s}")
    if not balls:
        raise DomainError("at least one ball is required")
    for ball in balls:
        if ball.d != f.d:
            raise DomainError(f"ball has {ball.d} coordinates, field has d={f.d}")
        _check_zero_at(f, ball.center, zero_tol)

    def ratio(ball: Ball) -> float:
        norm = ball_lr_norm(f, ball, r)
        seminorm = _ball_seminorm(f, ball, s, r)
        if seminorm == 0:
            return 0.0 if norm == 0 else np.inf
        return norm / (ball.radius**s * seminorm)

    values = indexed_map(ratio, balls, workers)
    findings = []
    per_radius: dict[float, float] = {}
    for ball, value in zip(balls, values):
        if np.isinf(value):
            findings.append(
                CheckFinding(
                    code="seminorm_vanishes",
                    severity=FindingSeverity.ERROR,
                    message=f"f is constant and nonzero on {ball}",
                    data={"radius": ball.radius},
                )
            )
            continue
        per_radius[ball.radius] = max(per_radius.get(ball.radius, 0.0), value)

    radii = sorted(per_radius, reverse=True)
    ratios = [per_radius[t] for t in radii]
    fit: ExponentFit | None = None
    if len(radii) >= MIN_FIT_POINTS and all(v > 0 for v in ratios):
        fit = loglog_fit(
            ScanSeries(name=f"poincare_s{s:g}", parameters=radii, values=ratios,
                       parameter_label="radius", value_label="ratio")
        )
        if fit.slope < -thresholds.slope_tol:
            findings.append(
                CheckFinding(
                    code="poincare_ratio_unbounded",
                    severity=FindingSeverity.ERROR,
                    message=f"ratio grows as the balls shrink (slope {fit.slope:.4f})",
                    data={"slope": fit.slope},
                )
            )
    else:
        findings.append(
            CheckFinding(
                code="too_few_radii",
                severity=FindingSeverity.WARNING,
                message=f"{len(radii)} distinct radii with positive ratios, no fit",
            )
        )
    finite = [v for v in values if np.isfinite(v)]
    return PoincareReport(
        passed=not any(x.severity == FindingSeverity.ERROR for x in findings),
        findings=findings,
        s=s,
        r=r,
        radii=radii,
        ratios=ratios,
        fit=fit,
        empirical_constant=max(finite, default=0.0),
    )


# ---------------------------------------------------------------------------
# Hausdorff obstruction
# ---------------------------------------------------------------------------


def local_exponent(d: int, q: float, s: float, r: float) -> float:
    """r[d(1/2 + 1/r - 1/q) - s], the power of τ bounded by ‖w‖^r_{Ẇ^{s,r}(B_τ)}."""
    return r * (d * (0.5 + 1.0 / r - 1.0 / q) - s)


def obstruction_threshold(d: int, sigma: float, s: float, r: float) -> float | None:
    """q = d/(d(1/2 + 1/r) - σ/r - s); None when every q binds."""
    denominator = d * (0.5 + 1.0 / r) - sigma / r - s
    return d / denominator if denominator > 0 else None


def alternative_threshold(d: int, sigma: float, s: float) -> float | None:
    """q = (d - σ)/(d - σ - s); None when d - σ <= s."""
    denominator = d - sigma - s
    return (d - sigma) / denominator if denominator > 0 else None


def ball_seminorm_sums(
    w: SampleField,
    zero_set: ZeroSetEstimate,
    sigma: float,
    s: float,
    r: float,
    max_balls: int = MAX_BALLS,
    workers: int = 1,
) -> ScanSeries | None:
    """Σ_k ‖w‖^r_{Ẇ^{s,r}(B_k)} over candidate balls of radius τ, with Σ_k τ^σ as aux.

    At most ``max_balls`` evenly spread candidates are evaluated per scale and the
    sum is extrapolated from their mean. Scales with τ > BALL_MAX_RADIUS are skipped.
    """
    taus, sums, tau_sums, counts = [], [], [], []
    for tau, cells in zip(zero_set.taus, zero_set.candidates):
        if tau > BALL_MAX_RADIUS or not cells:
            continue
        picks = np.unique(np.linspace(0, len(cells) - 1, min(max_balls, len(cells))).astype(int))
        balls = [Ball(center=cell_center(cells[i], tau), radius=tau) for i in picks]
        local = indexed_map(lambda b: ball_slobodeckij_seminorm(w, b, s, r) ** r, balls, workers)
        taus.append(tau)
        sums.append(float(np.mean(local)) * len(cells))
        tau_sums.append(len(cells) * tau**sigma)
        counts.append(float(len(cells)))
        logger.debug(
            "ball sums tau=%g: %d of %d balls, sum %.4g", tau, len(balls), len(cells), sums[-1]
        )
    if not taus:
        return None
    order = np.argsort(taus)[::-1]
    return ScanSeries(
        name="ball_seminorm_sum",
        parameters=[taus[i] for i in order],
        values=[sums[i] for i in order],
        parameter_label="tau",
        value_label="seminorm_sum",
        aux={
            "tau_sigma_sum": [tau_sums[i] for i in order],
            "candidates": [counts[i] for i in order],
        },
        metadata={"sigma": sigma, "s": s, "r": r},
    )


def _slope(series: ScanSeries, values: list[float]) -> float | None:
    if len(values) < MIN_FIT_POINTS or any(v <= 0 for v in values):
        return None
    try:
        return loglog_fit(series.model_copy(update={"values": values})).slope
    except FitError:
        return None


def _scan_row(
    q: float,
    d: int,
    s: float,
    r: float,
    sigma: float,
    sums: ScanSeries | None,
    seminorm_slope: float | None,
    tau_sigma_slope: float | None,
    thresholds: FitThresholds,
) -> HausdorffScanRow:
    """One q of the obstruction scan, measured from the ball sums when they fit.

    The measured chain binds when Σ_k τ^E dominates Σ_k τ^σ on the candidate cells
    and the ball sums Σ_k ‖w‖^r vanish faster than Σ_k τ^E.
    """
    exponent = local_exponent(d, q, s, r)
    expected = exponent <= sigma
    chain_slope = None
    if sums is not None:
        taus = np.asarray(sums.parameters)
        chain = list(np.asarray(sums.aux["candidates"]) * taus**exponent)
        chain_slope = _slope(sums, chain)
    if chain_slope is None or seminorm_slope is None or tau_sigma_slope is None:
        return HausdorffScanRow(
            q=q,
            exponent=exponent,
            expected_binding=expected,
            binding=expected,
            chain_slope=chain_slope,
            seminorm_slope=seminorm_slope,
        )
    binding = (
        chain_slope <= tau_sigma_slope + thresholds.slope_tol
        and seminorm_slope > chain_slope + thresholds.slope_tol
    )
    return HausdorffScanRow(
        q=q,
        exponent=exponent,
        expected_binding=expected,
        binding=binding,
        measured=True,
        chain_slope=chain_slope,
        seminorm_slope=seminorm_slope,
        seminorm_contradiction=binding and tau_sigma_slope <= thresholds.slope_tol,
    )


def _first_flip(
    rows: list[HausdorffScanRow], binds: Callable[[HausdorffScanRow], bool]
) -> float | None:
    return next((b.q for a, b in zip(rows, rows[1:]) if binds(a) and not binds(b)), None)


def _tau_scan_agreement(
    w: SampleField, qs: list[float], rows: list[HausdorffScanRow], zero_set: ZeroSetEstimate
) -> tuple[bool | None, ScanSeries | None]:
    taus = [t for t in zero_set.taus if t <= CROSS_CHECK_MAX_TAU]
    try:
        report = tau_scan_report(w, qs, taus)
    except (ZeroPreconditionError, ScaleResolutionError, FitError) as exc:
        logger.info("tau_scan cross-check skipped: %s", exc)
        return None, None
    agrees = all(v.obstruction == row.binding for v, row in zip(report.verdicts, rows))
    return agrees, report.series[0]


def hausdorff_obstruction_scan(
    w: SampleField,
    zero_set: ZeroSetEstimate,
    qs: list[float],
    s: float,
    r: float = 2.0,
    sigma: float | None = None,
    seminorm_route: bool = True,
    thresholds: FitThresholds = FIT_THRESHOLDS,
    max_balls: int = MAX_BALLS,
    workers: int = 1,
) -> HausdorffScanReport:
    """Whether τ^σ <= τ^{E(q)} <~ ‖w‖^r_{Ẇ^{s,r}(B_τ)} binds for each scanned q.

    The expected verdict binds iff E(q) = r[d(1/2 + 1/r - 1/q) - s] <= σ, that is
    iff q <= d/(d(1/2 + 1/r) - σ/r - s); it is reported as ``expected_binding``
    and ``expected_q_flip``. The alternative threshold (d-σ)/(d-σ-s) is reported
    alongside without a verdict. When ``seminorm_route`` is set, the ball sums
    Σ_k ‖w‖^r over candidate balls are measured and ``binding`` is decided from
    their slopes; otherwise ``binding`` falls back to the expected verdict. A
    measured binding row is a contradiction when Σ_k τ^σ does not vanish.

    With σ = 0 the verdicts are cross-checked against ``tau_scan_report``.
    σ defaults to the box-counting dimension of ``zero_set``.
    """
    if not 0 < s < 1:
        raise DomainError(f"s must lie in (0, 1), got {s}")
    if not qs:
        raise DomainError("at least one q is required")
    d = w.d
    sigma_estimated = sigma is None
    if sigma is None:
        sigma = zero_set.dimension if zero_set.dimension is not None else 0.0
    threshold = obstruction_threshold(d, sigma, s, r)
    alternative = alternative_threshold(d, sigma, s)

    if all(c == 0 for c in zero_set.counts):
        return HausdorffScanReport(
            passed=True,
            findings=[
                CheckFinding(
                    code="vacuous",
                    severity=FindingSeverity.INFO,
                    message="no candidate cells at any scale; nothing to obstruct",
                )
            ],
            sigma=sigma,
            sigma_estimated=sigma_estimated,
            s=s,
            r=r,
            threshold_q=threshold,
            alternative_threshold_q=alternative,
            vacuous=True,
            zero_set=zero_set,
        )

    series: list[ScanSeries] = []
    sums, seminorm_slope, tau_sigma_slope = None, None, None
    if seminorm_route:
        sums = ball_seminorm_sums(w, zero_set, sigma, s, r, max_balls, workers)
        if sums is not None:
            series.append(sums)
            seminorm_slope = _slope(sums, list(sums.values))
            tau_sigma_slope = _slope(sums, sums.aux["tau_sigma_sum"])

    qs = sorted(qs)
    rows = [
        _scan_row(q, d, s, r, sigma, sums, seminorm_slope, tau_sigma_slope, thresholds)
        for q in qs
    ]
    q_flip = _first_flip(rows, lambda row: row.binding)
    expected_q_flip = _first_flip(rows, lambda row: row.expected_binding)

    findings = []
    agrees = None
    if sigma == 0:
        agrees, masses = _tau_scan_agreement(w, qs, rows, zero_set)
        if masses is not None:
            series.append(masses)
        if agrees is False:
            findings.append(
                CheckFinding(
                    code="tau_scan_disagrees",
                    severity=FindingSeverity.ERROR,
                    message="σ = 0 binding verdicts differ from the tau_scan obstruction verdicts",
                )
            )
    if zero_set.dimension is not None and abs(zero_set.dimension - sigma) > 0.5:
        findings.append(
            CheckFinding(
                code="sigma_differs_from_box_count",
                severity=FindingSeverity.WARNING,
                message=f"σ={sigma:g} but the box-counting estimate is {zero_set.dimension:.3f}",
                data={"sigma": sigma, "dimension": zero_set.dimension},
            )
        )
    logger.debug(
        "hausdorff scan: sigma=%g threshold=%s flip=%s expected flip=%s",
        sigma,
        threshold,
        q_flip,
        expected_q_flip,
    )
    return HausdorffScanReport(
        passed=not any(x.severity == FindingSeverity.ERROR for x in findings),
        findings=findings,
        sigma=sigma,
        sigma_estimated=sigma_estimated,
        s=s,
        r=r,
        threshold_q=threshold,
        alternative_threshold_q=alternative,
        q_flip=q_flip,
        expected_q_flip=expected_q_flip,
        rows=rows,
        zero_set=zero_set,
        tau_scan_agrees=agrees,
        series=series,
    )
