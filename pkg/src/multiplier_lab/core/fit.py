"""Log-log regression and divergence classification shared by every scan."""

import csv
import logging
from pathlib import Path

import numpy as np
from scipy import stats

from multiplier_lab.config import FIT_THRESHOLDS, FitThresholds
from multiplier_lab.core.exceptions import FitError
from multiplier_lab.models.scan_models import (
    DivergenceAssessment,
    DivergenceVerdict,
    ExponentFit,
    ScanSeries,
)

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 4
# box-growth stability checks run on as few as two boxes
MIN_STABILITY_POINTS = 2
# increments below this fraction of the largest sum are rounding noise
SETTLED_RTOL = 1e-12


def _linear_fit(x: np.ndarray, y: np.ndarray) -> ExponentFit:
    result = stats.linregress(x, y)
    r_squared = float(np.clip(result.rvalue**2, 0.0, 1.0))
    if not np.isfinite(r_squared):
        r_squared = 0.0
    return ExponentFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        r_squared=r_squared,
        n_points=len(x),
    )


def _log_arrays(series: ScanSeries) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(series.values, dtype=float)
    if np.any(values <= 0):
        raise FitError(f"series '{series.name}' has nonpositive values; filter zeros first")
    return np.log(np.asarray(series.parameters, dtype=float)), np.log(values)


def loglog_fit(series: ScanSeries) -> ExponentFit:
    """Ordinary least squares of log(value) against log(parameter).

    Raises:
        FitError: With fewer than four points or any nonpositive value.
    """
    if len(series) < MIN_FIT_POINTS:
        raise FitError(f"need >= {MIN_FIT_POINTS} points to fit, got {len(series)}")
    return _linear_fit(*_log_arrays(series))


def stability_slope(series: ScanSeries) -> float:
    """Least-squares log-log slope of a short box-growth series.

    Two points give the endpoint slope. No ``ExponentFit`` is built, since those
    need four points.

    Raises:
        FitError: With fewer than two points or any nonpositive value.
    """
    if len(series) < MIN_STABILITY_POINTS:
        raise FitError(f"need >= {MIN_STABILITY_POINTS} points for a slope, got {len(series)}")
    x, y = _log_arrays(series)
    return float(stats.linregress(x, y).slope)


def _increments(series: ScanSeries) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(series.values, dtype=float)
    params = np.asarray(series.parameters, dtype=float)
    order = np.argsort(params)
    values, params = values[order], params[order]
    return params[1:], np.abs(np.diff(values))


def increment_fit(series: ScanSeries) -> ExponentFit:
    """Log-log fit of the successive increments of a partial-sum series.

    For dyadic parameters the increment over (P, 2P] of Σ a_k behaves like P^γ,
    and the sums diverge iff γ >= 0. Increment magnitudes are used, so discretized
    sums that approach their limit from either side are handled; exact zero
    increments are dropped.

    Raises:
        FitError: With fewer than four nonzero increments.
    """
    params, steps = _increments(series)
    keep = steps > 0
    if np.count_nonzero(keep) < MIN_FIT_POINTS:
        raise FitError(
            f"series '{series.name}' has {np.count_nonzero(keep)} nonzero increments, "
            f"need >= {MIN_FIT_POINTS}"
        )
    return _linear_fit(np.log(params[keep]), np.log(steps[keep]))


def _log_guard(series: ScanSeries, thresholds: FitThresholds) -> bool:
    """Detect logarithmic growth: increments that do not decay across the scan."""
    values = np.asarray(series.values, dtype=float)
    if len(values) < MIN_FIT_POINTS + 1:
        return False
    params = np.asarray(series.parameters, dtype=float)
    order = np.argsort(params)
    steps = np.diff(values[order])
    if np.any(steps <= 0):
        return False
    fit = increment_fit(series)
    return fit.slope >= -thresholds.increment_tol and fit.r_squared >= thresholds.r2_min


def assess_divergence(
    series: ScanSeries,
    slope_tol: float | None = None,
    r2_min: float | None = None,
    thresholds: FitThresholds = FIT_THRESHOLDS,
) -> DivergenceAssessment:
    """Classify a scan series as convergent, divergent or inconclusive.

    Divergent when the log-log slope exceeds ``slope_tol`` with R² >= ``r2_min``;
    convergent when |slope| <= ``slope_tol`` unless the logarithmic guard fires;
    inconclusive otherwise.
    """
    slope_tol = thresholds.slope_tol if slope_tol is None else slope_tol
    r2_min = thresholds.r2_min if r2_min is None else r2_min
    fit = loglog_fit(series)

    if fit.slope > slope_tol and fit.r_squared >= r2_min:
        verdict = DivergenceVerdict.DIVERGENT
    elif abs(fit.slope) <= slope_tol:
        if _log_guard(series, thresholds):
            logger.debug("log guard marks '%s' divergent (slope %.4f)", series.name, fit.slope)
            return DivergenceAssessment(
                verdict=DivergenceVerdict.DIVERGENT,
                fit=fit,
                increment_fit=increment_fit(series),
                log_guard=True,
            )
        verdict = DivergenceVerdict.CONVERGENT
    else:
        verdict = DivergenceVerdict.INCONCLUSIVE
    return DivergenceAssessment(verdict=verdict, fit=fit)


def classify_divergence(
    series: ScanSeries,
    slope_tol: float | None = None,
    r2_min: float | None = None,
) -> DivergenceVerdict:
    return assess_divergence(series, slope_tol, r2_min).verdict


def classify_partial_sums(
    series: ScanSeries,
    increment_tol: float | None = None,
    thresholds: FitThresholds = FIT_THRESHOLDS,
) -> DivergenceAssessment:
    """Membership verdict for a series of partial sums over dyadic truncations.

    Divergent iff the fitted increment exponent is >= -``increment_tol``.
    """
    increment_tol = thresholds.increment_tol if increment_tol is None else increment_tol
    if len(series) < MIN_FIT_POINTS + 1:
        raise FitError(f"need >= {MIN_FIT_POINTS + 1} partial sums, got {len(series)}")
    fit = loglog_fit(series) if all(v > 0 for v in series.values) else None

    _, steps = _increments(series)
    scale = float(np.max(np.abs(series.values)))
    if steps[-1] <= SETTLED_RTOL * scale:
        # the sums have settled: nothing accumulates under refinement
        return DivergenceAssessment(verdict=DivergenceVerdict.CONVERGENT, fit=fit)

    inc = increment_fit(series)
    verdict = (
        DivergenceVerdict.DIVERGENT if inc.slope >= -increment_tol else DivergenceVerdict.CONVERGENT
    )
    logger.debug(
        "partial sums '%s': increment exponent %.4f -> %s", series.name, inc.slope, verdict.value
    )
    return DivergenceAssessment(verdict=verdict, fit=fit, increment_fit=inc)


def series_to_rows(series: ScanSeries) -> list[list[str]]:
    """CSV rows (header first) for a series: parameter, value, aux columns."""
    aux_keys = sorted(series.aux)
    header = [series.parameter_label, series.value_label, *aux_keys]
    rows = [header]
    for i, (p, v) in enumerate(zip(series.parameters, series.values)):
        aux = (repr(float(series.aux[k][i])) for k in aux_keys)
        rows.append([repr(float(p)), repr(float(v)), *aux])
    return rows


def series_from_csv(path: str | Path, name: str | None = None) -> ScanSeries:
    """Load a stored series: header row, then parameter and value columns."""
    resolved = Path(path)
    with resolved.open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise FitError(f"{path}: missing header with parameter and value columns")
        params, values = [], []
        for row in reader:
            if not row:
                continue
            params.append(float(row[0]))
            values.append(float(row[1]))
    return ScanSeries(
        name=name or resolved.stem,
        parameters=params,
        values=values,
        parameter_label=header[0],
        value_label=header[1],
    )
