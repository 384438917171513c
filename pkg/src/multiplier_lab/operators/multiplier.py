"""Truncated scalar multiplier operators T_u a = F(u F^{-1} a) and their norms.

Also hosts the χ_{I_τ} certificate family, the weighted lower constant of the
exponential system in L²_w, and the τ-scan obstruction diagnostic.
"""

import logging

import numpy as np
import scipy.linalg
from pydantic import field_serializer, model_validator

from multiplier_lab.analysis.exceptions import ScaleResolutionError, ZeroPreconditionError
from multiplier_lab.config import AscentConfig
from multiplier_lab.core.exceptions import BoxTooLargeError, DomainError
from multiplier_lab.core.fit import loglog_fit
from multiplier_lab.core.grid import analyze, lq_norm_vector, synthesize
from multiplier_lab.models.field_models import (
    ArrayModel,
    CoeffField,
    FreqBox,
    SampleField,
    freeze_array,
    serialize_array,
)
from multiplier_lab.models.report_models import (
    CheckFinding,
    FindingSeverity,
    MixedNormEstimate,
    ReductionReport,
    SpectralNormEstimate,
    TauScanReport,
    TauScanVerdict,
    WeightedConstantEstimate,
)
from multiplier_lab.models.scan_models import ScanSeries
from multiplier_lab.operators.ascent import DEFAULT_ASCENT, estimate_mixed_norm
from multiplier_lab.operators.exceptions import DegenerateWeightError, IncompatibleBoxError

logger = logging.getLogger(__name__)

SVD_MAX_SIZE = 1024
POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000
REDUCTION_SLACK = 0.05
ZERO_TOL = 1e-8


class ConvOperator(ArrayModel):
    """(T_u a)(k) = Σ_m û(k - m) a(m), k in out_box, m in in_box."""

    symbol: CoeffField
    in_box: FreqBox
    out_box: FreqBox
    matrix: np.ndarray

    @model_validator(mode="after")
    def _shape(self) -> "ConvOperator":
        if self.matrix.shape != (self.out_box.size, self.in_box.size):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match boxes "
                f"({self.out_box.size}, {self.in_box.size})"
            )
        return self

    @field_serializer("matrix")
    def _dump_matrix(self, matrix: np.ndarray):
        return serialize_array(matrix)

    @property
    def d(self) -> int:
        return self.in_box.d

    def scaled(self, factor: complex) -> "ConvOperator":
        symbol = CoeffField(box=self.symbol.box, coeffs=self.symbol.coeffs * factor)
        return ConvOperator(
            symbol=symbol,
            in_box=self.in_box,
            out_box=self.out_box,
            matrix=freeze_array(self.matrix * factor),
        )


def convolution_matrix(symbol: CoeffField, in_box: FreqBox, out_box: FreqBox) -> np.ndarray:
    """Dense matrix û(k - m), zero where k - m leaves the symbol box."""
    k = out_box.wavevectors()
    m = in_box.wavevectors()
    offsets = k[:, None, :] - m[None, :, :]
    inside = np.all(np.abs(offsets) <= symbol.box.N, axis=-1)
    index = np.where(inside[..., None], offsets + symbol.box.N, 0)
    values = symbol.coeffs[tuple(index[..., j] for j in range(symbol.d))]
    return np.where(inside, values, 0.0)


def build_operator(
    u: SampleField | CoeffField, in_box: FreqBox, out_box: FreqBox | None = None
) -> ConvOperator:
    """Truncated multiplier operator from samples or coefficients of the symbol.

    From samples, the symbol is analyzed on the box of half-width N_in + N_out, which
    every entry of the matrix reads.

    Raises:
        IncompatibleBoxError: On a dimension mismatch or when the grid cannot resolve
            the symbol box.
    """
    out_box = in_box if out_box is None else out_box
    if in_box.d != out_box.d or in_box.d != u.d:
        raise IncompatibleBoxError(
            f"dimensions differ: symbol d={u.d}, in d={in_box.d}, out d={out_box.d}"
        )
    if isinstance(u, SampleField):
        symbol_box = FreqBox(d=u.d, N=in_box.N + out_box.N)
        try:
            symbol = analyze(u, symbol_box)
        except BoxTooLargeError as exc:
            raise IncompatibleBoxError(f"symbol box N={symbol_box.N}: {exc}") from exc
    else:
        symbol = u
    matrix = convolution_matrix(symbol, in_box, out_box)
    logger.debug("built operator %s -> %s from symbol N=%d", in_box, out_box, symbol.box.N)
    return ConvOperator(
        symbol=symbol, in_box=in_box, out_box=out_box, matrix=freeze_array(matrix)
    )


def apply(op: ConvOperator, a: CoeffField) -> CoeffField:
    if a.box != op.in_box:
        raise IncompatibleBoxError(f"input box {a.box} differs from operator box {op.in_box}")
    out = op.matrix @ a.flat()
    return CoeffField(box=op.out_box, coeffs=out.reshape(op.out_box.shape))


def sample_route_apply(u: SampleField, a: CoeffField, out_box: FreqBox) -> CoeffField:
    """analyze(u · synthesize(a)) on ``out_box``; exact for band-limited u."""
    f = synthesize(a, u.grid)
    return analyze(SampleField(grid=u.grid, values=u.values * f.values), out_box)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def _power_iteration(matrix: np.ndarray, seed: int) -> tuple[float, int, bool]:
    """Largest eigenvalue of A*A; stops on |ev - ev_prev| < tol·ev."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(matrix.shape[1]) + 1j * rng.standard_normal(matrix.shape[1])
    x /= np.linalg.norm(x)
    adjoint = matrix.conj().T
    ev_prev = None
    ev = 0.0
    for iteration in range(1, POWER_MAX_ITER + 1):
        y = adjoint @ (matrix @ x)
        ev = float(np.linalg.norm(y))
        if ev == 0:
            return 0.0, iteration, True
        x = y / ev
        if ev_prev is not None and abs(ev - ev_prev) < POWER_TOL * ev:
            return ev, iteration, True
        ev_prev = ev
    return ev, POWER_MAX_ITER, False


def spectral_norm_estimate(
    op: ConvOperator, method: str = "auto", seed: int = 0
) -> SpectralNormEstimate:
    """Largest singular value: dense SVD up to 1024 unknowns, power iteration beyond."""
    if method == "auto":
        method = "svd" if op.in_box.size <= SVD_MAX_SIZE else "power_iteration"
    if method == "svd":
        value = float(scipy.linalg.svdvals(op.matrix)[0])
        return SpectralNormEstimate(value=value, method="svd")
    if method != "power_iteration":
        raise DomainError(f"unknown spectral norm method '{method}'")
    ev, iterations, converged = _power_iteration(op.matrix, seed)
    logger.debug("power iteration: %d iterations, converged=%s", iterations, converged)
    return SpectralNormEstimate(
        value=float(np.sqrt(ev)), method=method, iterations=iterations, converged=converged
    )


def norm_2_2(op: ConvOperator, method: str = "auto", seed: int = 0) -> float:
    """‖T‖_{2→2}; an unconverged power iteration is logged and its value returned."""
    if op.in_box != op.out_box:
        raise IncompatibleBoxError("norm_2_2 needs a square common box")
    estimate = spectral_norm_estimate(op, method, seed)
    if not estimate.converged:
        logger.warning(
            "norm_2_2 on box N=%d: power iteration stopped after %d iterations; "
            "%.6g is a lower estimate",
            op.in_box.N,
            estimate.iterations,
            estimate.value,
        )
    return estimate.value


def norm_2_inf(op: ConvOperator) -> float:
    """max_k (Σ_m |û(k - m)|²)^{1/2}, exact."""
    return float(np.max(np.linalg.norm(op.matrix, axis=1)))


def chi_box_coeffs(
    tau: float, box: FreqBox, center: tuple[float, ...] | None = None
) -> CoeffField:
    """Fourier coefficients of the indicator of the cube I_τ(center) = center + [-τ, τ]^d.

    ĉ(k) = Π_j sin(2πτk_j)/(πk_j), with 2τ for k_j = 0, times e^{-2πi<k, center>}.
    """
    if not 0 < tau < 0.5:
        raise DomainError(f"tau must lie in (0, 1/2), got {tau}")
    k = box.indices().astype(float)
    safe = np.where(k == 0, 1.0, k)
    factor = np.where(k == 0, 2 * tau, np.sin(2 * np.pi * tau * k) / (np.pi * safe))
    grids = np.meshgrid(*([factor] * box.d), indexing="ij")
    coeffs = np.prod(grids, axis=0).astype(complex)
    if center is not None:
        if len(center) != box.d:
            raise DomainError(f"center has {len(center)} coordinates, box has d={box.d}")
        axes = np.meshgrid(*([box.indices()] * box.d), indexing="ij")
        coeffs = coeffs * np.exp(-2j * np.pi * sum(a * c for a, c in zip(axes, center)))
    return CoeffField(box=box, coeffs=coeffs)


def structured_witnesses(
    box: FreqBox, center: tuple[float, ...] | None = None
) -> dict[str, np.ndarray]:
    """χ_{I_τ} coefficient vectors for dyadic τ = 1/4, 1/8, ... down to the box scale."""
    witnesses = {}
    tau = 0.25
    while tau * (2 * box.N + 1) >= 0.5:
        witnesses[f"chi_tau={tau:g}"] = chi_box_coeffs(tau, box, center).flat()
        tau /= 2
    return witnesses


def norm_2_q(
    op: ConvOperator, q: float, config: AscentConfig = DEFAULT_ASCENT
) -> MixedNormEstimate:
    """‖T‖_{2→q} for q > 2: χ_{I_τ} and basis witnesses plus the ascent."""
    if not q > 2:
        raise DomainError(f"norm_2_q needs q > 2, got {q}; use norm_2_2")
    return estimate_mixed_norm(op.matrix, 2.0, q, config, structured_witnesses(op.in_box))


def pq_norm(
    op: ConvOperator, p: float, q: float, config: AscentConfig = DEFAULT_ASCENT
) -> MixedNormEstimate:
    if p > q:
        raise DomainError(f"pq_norm needs p <= q, got p={p}, q={q}")
    return estimate_mixed_norm(op.matrix, p, q, config, structured_witnesses(op.in_box))


def reduced_exponent(p: float, q: float) -> float:
    """q̃ = (1/2 - 1/p + 1/q)^{-1}; ∞ when the bracket vanishes."""
    bracket = 0.5 - 1.0 / p + 1.0 / q
    return np.inf if bracket <= 0 else 1.0 / bracket


def pq_reduction_check(
    op: ConvOperator, p: float, q: float, config: AscentConfig = DEFAULT_ASCENT
) -> ReductionReport:
    """Check norm_{2,q̃} <= c · norm_{p,q} and record the empirical c.

    The certified lower bound of the (2, q̃) norm is divided by the best (p, q) value
    found; interpolation against the adjoint gives c <= 1 on symmetric square boxes.
    """
    if not (1 <= p <= q <= 2 or 2 <= p <= q):
        raise DomainError(f"reduction needs 1 <= p <= q <= 2 or 2 <= p <= q, got ({p}, {q})")
    q_tilde = reduced_exponent(p, q)
    norm_pq = pq_norm(op, p, q, config)
    norm_reduced = estimate_mixed_norm(
        op.matrix, 2.0, q_tilde, config, structured_witnesses(op.in_box)
    )
    c = norm_reduced.lower / norm_pq.upper if norm_pq.upper > 0 else 0.0
    findings = []
    if c > 1 + REDUCTION_SLACK:
        findings.append(
            CheckFinding(
                code="reduction_constant_exceeded",
                severity=FindingSeverity.ERROR,
                message=f"norm_2,{q_tilde:g} / norm_{p:g},{q:g} = {c:.4f} > {1 + REDUCTION_SLACK}",
                data={"ratio": c},
            )
        )
    return ReductionReport(
        passed=not findings,
        findings=findings,
        p=p,
        q=q,
        q_tilde=q_tilde,
        norm_pq=norm_pq.upper,
        norm_2_q_tilde=norm_reduced.lower,
        ratio=c,
    )


# ---------------------------------------------------------------------------
# weighted exponential systems
# ---------------------------------------------------------------------------


def toeplitz_gram(weight: SampleField, box: FreqBox) -> np.ndarray:
    """G[k, m] = ŵ(k - m), so that ‖Σ a_k e_k‖²_{L²_w} = a* G a."""
    return build_operator(weight, box, box).matrix


def _weighted_ratio(gram: np.ndarray, a: np.ndarray, q: float) -> float:
    energy = float(np.real(np.vdot(a, gram @ a)))
    return np.sqrt(max(energy, 0.0)) / lq_norm_vector(a, q)


def weighted_lower_constant(
    gram: np.ndarray,
    q: float,
    N: int,
    config: AscentConfig = DEFAULT_ASCENT,
    witnesses: dict[str, np.ndarray] | None = None,
) -> WeightedConstantEstimate:
    """Best D with D‖a‖_q <= ‖Σ a_k e_k‖_{L²_w} on one box.

    With G = LL*, D = 1/‖L^{-*}‖_{2→q}. Every witness a gives the certified upper
    bound sqrt(a* G a)/‖a‖_q on D; q = 2 is exact through λ_min(G).

    Raises:
        DegenerateWeightError: If G is not positive definite.
    """
    if not q >= 2:
        raise DomainError(f"q must be >= 2, got {q}")
    try:
        lower_factor = scipy.linalg.cholesky(gram, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise DegenerateWeightError(f"Gram matrix is not positive definite: {exc}") from exc

    witnesses = witnesses or {}
    structured = {label: _weighted_ratio(gram, a, q) for label, a in witnesses.items()}
    best_label = min(structured, key=structured.__getitem__) if structured else ""
    structured_value = structured[best_label] if structured else np.inf

    if q == 2:
        value = float(np.sqrt(max(scipy.linalg.eigvalsh(gram, subset_by_index=[0, 0])[0], 0.0)))
        return WeightedConstantEstimate(
            q=q, N=N, value=value, structured=min(structured_value, np.finfo(float).max),
            ascent=value, exact=True, witness_label="min_eigenvector",
        )

    inverse = scipy.linalg.solve_triangular(
        lower_factor, np.eye(gram.shape[0], dtype=complex), lower=True
    )
    factor = inverse.conj().T
    # b = L* a maps a structured coefficient vector to the ascent variable
    seeds = {label: lower_factor.conj().T @ a for label, a in witnesses.items()}
    estimate = estimate_mixed_norm(factor, 2.0, q, config, seeds)
    ascent_value = 1.0 / estimate.lower if estimate.lower > 0 else np.inf
    value = min(structured_value, ascent_value)
    label = best_label if structured_value <= ascent_value else estimate.witness_label
    logger.debug("weighted constant q=%g N=%d: %.6g (%s)", q, N, value, label)
    return WeightedConstantEstimate(
        q=q,
        N=N,
        value=value,
        structured=min(structured_value, np.finfo(float).max),
        ascent=ascent_value,
        converged=estimate.converged,
        witness_label=label,
    )


def weighted_constant_estimate(
    weight: SampleField, N: int, q: float, config: AscentConfig = DEFAULT_ASCENT
) -> WeightedConstantEstimate:
    """D_N for the weight, with χ witnesses centred at the weight's smallest sample."""
    box = FreqBox(d=weight.d, N=N)
    flat_index = int(np.argmin(np.abs(weight.values)))
    index = np.unravel_index(flat_index, weight.grid.shape)
    center = tuple(float(weight.grid.axis()[i]) for i in index)
    gram = toeplitz_gram(weight, box)
    return weighted_lower_constant(gram, q, N, config, structured_witnesses(box, center))


# ---------------------------------------------------------------------------
# τ-scan
# ---------------------------------------------------------------------------


def _check_zero_at_origin(w: SampleField, zero_tol: float) -> None:
    magnitude = np.abs(w.values)
    at_origin = magnitude[w.grid.nearest_index((0.0,) * w.d)]
    if at_origin > zero_tol * max(magnitude.max(), np.finfo(float).tiny):
        raise ZeroPreconditionError(
            f"|w| at the origin is {at_origin:.3g}, not below {zero_tol:g}·max|w|"
        )


def cube_mass(w: SampleField, tau: float) -> float:
    """‖w‖_{L²(I_τ)} with I_τ = [-τ, τ]^d, as a Riemann sum."""
    inside = np.all([np.abs(c) <= tau * (1 + 1e-12) for c in w.grid.coordinates()], axis=0)
    return float(np.sqrt(np.sum(np.abs(w.values[inside]) ** 2) / w.grid.size))


def tau_scan(
    w: SampleField, q: float, taus: list[float], zero_tol: float = ZERO_TOL
) -> ScanSeries:
    """(τ, ‖w‖_{L²(I_τ)} / τ^{d(1-1/q)}); a positive fitted slope means an obstruction.

    Raises:
        ZeroPreconditionError: If w does not vanish at the origin.
        ScaleResolutionError: If a cube holds fewer than two samples per axis.
    """
    _check_zero_at_origin(w, zero_tol)
    if min(taus) * w.grid.n < 1:
        raise ScaleResolutionError(f"tau={min(taus):g} is below the grid spacing 1/{w.grid.n}")
    exponent = w.d * (1.0 - 1.0 / q)
    masses = [cube_mass(w, tau) for tau in taus]
    return ScanSeries(
        name=f"tau_scan_q{q:g}",
        parameters=list(taus),
        values=[m / tau**exponent for m, tau in zip(masses, taus)],
        parameter_label="tau",
        value_label="ratio",
        aux={"mass": masses},
        metadata={"q": q, "exponent": exponent},
    )


def tau_scan_report(
    w: SampleField, qs: list[float], taus: list[float], zero_tol: float = ZERO_TOL
) -> TauScanReport:
    """Per-q obstruction verdicts plus the critical q = d/(d - mass slope)."""
    series = [tau_scan(w, q, taus, zero_tol) for q in qs]
    masses = ScanSeries(
        name="cube_mass",
        parameters=list(taus),
        values=series[0].aux["mass"] if series else [cube_mass(w, t) for t in taus],
        parameter_label="tau",
        value_label="mass",
    )
    mass_fit = loglog_fit(masses)
    critical_q = w.d / (w.d - mass_fit.slope) if mass_fit.slope < w.d else None

    verdicts, findings = [], []
    for q, s in zip(qs, series):
        slope = loglog_fit(s).slope
        verdict = TauScanVerdict(q=q, ratio_slope=slope, obstruction=slope > 0)
        verdicts.append(verdict)
        predicted = critical_q is None or q < critical_q
        if verdict.obstruction != predicted:
            findings.append(
                CheckFinding(
                    code="tau_scan_inconsistent",
                    severity=FindingSeverity.WARNING,
                    message=f"q={q:g}: ratio slope {slope:.4f} disagrees with critical q",
                    data={"q": q, "ratio_slope": slope},
                )
            )
    return TauScanReport(
        passed=not findings,
        findings=findings,
        mass_fit=mass_fit,
        critical_q=critical_q,
        verdicts=verdicts,
        series=[masses, *series],
    )
