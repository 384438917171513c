"""Subcommand configurations and runners.

Each subcommand validates its config section into a frozen model before any
computation, runs the kernels and returns a CommandResult. ``passed`` is False when
a verdict the run was asked to check fails; the caller maps that to exit code 2.
"""

import csv
import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from multiplier_lab.analysis.constructions import (
    BetaParams,
    h_beta,
    tensor_F_beta,
    transform_decay_series,
    w_beta,
    w_beta_profile,
)
from multiplier_lab.analysis.sobolev import (
    higher_slobodeckij_seminorm,
    hs_seminorm,
    line_restriction_seminorm,
    membership_report,
    slobodeckij_refinement_scan,
)
from multiplier_lab.analysis.zeroset import (
    generalized_zero_set,
    hausdorff_obstruction_scan,
    poincare_check,
)
from multiplier_lab.cli.exceptions import ConfigError
from multiplier_lab.config import (
    CQ_STABILITY_TOL,
    DEFAULT_SEED,
    AscentConfig,
    CsvFloats,
    CsvInts,
    split_csv,
)
from multiplier_lab.core.fit import (
    assess_divergence,
    classify_partial_sums,
    loglog_fit,
    series_from_csv,
)
from multiplier_lab.core.grid import (
    analyze,
    lp_norm,
    lq_norm,
    max_box,
    sample_function,
    synthesize,
)
from multiplier_lab.models.field_models import Ball, CoeffField, FreqBox, SampleField, TorusGrid
from multiplier_lab.models.scan_models import ScanSeries
from multiplier_lab.operators.matrix_multiplier import HermitianField, equivalence_check
from multiplier_lab.operators.multiplier import (
    build_operator,
    norm_2_2,
    norm_2_inf,
    norm_2_q,
    pq_reduction_check,
    tau_scan_report,
)
from multiplier_lab.systems.shift_invariant import (
    RANK_TOL,
    GeneratorSet,
    LatticeSpec,
    box_generator,
    decomposition_residual,
    ev_domination_check,
    gaussian_generator,
    gramian,
    h_beta_generator,
    minimal_generator_count,
    rank_formula_check,
    sis_cq_diagnostic,
    sqrt_eigen_regularity_check,
    sub_gramians,
    tensor_h_beta_generator,
    zero_generator,
    zeta_zero_set,
)
from multiplier_lab.systems.zak import (
    DEFAULT_RADII,
    GaborWindow,
    blt_scan,
    box_window,
    gabor_cq_scan,
    gaussian_window,
    h_beta_window,
    min_modulus_scan,
    weighted_exponential_report,
    zak_report,
    zak_values,
)

logger = logging.getLogger(__name__)

# relative tolerance of the synthesize/analyze round trip
TRANSFORM_TOL = 1e-9

GeneratorName = Literal["box", "half_box", "gaussian", "h_beta", "zero"]
WindowName = Literal["gaussian", "box", "h_beta"]
LatticeName = Literal["none", "refinement", "diagonal", "quincunx"]


def _dyadic(first: int, last: int) -> list[float]:
    return [2.0**-j for j in range(first, last + 1)]


# ---------------------------------------------------------------------------
# configuration models
# ---------------------------------------------------------------------------


class CommandConfig(BaseModel):
    """Settings shared by every subcommand."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(default=DEFAULT_SEED, ge=0)
    workers: int = Field(default=1, ge=1)
    out: Path = Path("runs")

    @property
    def ascent(self) -> AscentConfig:
        return AscentConfig(seed=self.seed, workers=self.workers)


class TransformConfig(CommandConfig):
    d: int = Field(default=1, ge=1, le=2)
    n: int = 256
    N: int = Field(default=32, ge=0)
    beta: float = Field(default=0.3, gt=0, lt=1)


class SobolevConfig(CommandConfig):
    construction: Literal["w_beta", "h_beta", "samples"] = "w_beta"
    beta: float = Field(default=0.3, gt=0, lt=1)
    d: int = Field(default=1, ge=1, le=2)
    s: float = Field(default=0.5, gt=0)
    r: float = Field(default=2.0, ge=1)
    n: int = 512
    ns: CsvInts = Field(default_factory=lambda: [64, 128, 256, 512, 1024])
    samples: Path | None = None
    expect_member: bool | None = None

    @model_validator(mode="after")
    def _samples_given(self) -> "SobolevConfig":
        if self.construction == "samples" and self.samples is None:
            raise ValueError("construction=samples needs a samples path")
        return self


class MultnormConfig(CommandConfig):
    symbol: Literal["one", "w_beta", "matrix"] = "one"
    beta: float = Field(default=0.3, gt=0, lt=1)
    d: int = Field(default=1, ge=1, le=2)
    n: int = 256
    N: int = Field(default=16, ge=0)
    qs: CsvFloats = Field(default_factory=lambda: [4.0])
    p: float | None = Field(default=None, ge=1)


class TauScanConfig(CommandConfig):
    beta: float = Field(default=0.3, gt=0, lt=1)
    d: int = Field(default=1, ge=1, le=2)
    n: int = 4096
    qs: CsvFloats = Field(default_factory=lambda: [4.0, 5.0, 6.0])
    taus: CsvFloats = Field(default_factory=lambda: _dyadic(3, 8))


class ConstructConfig(CommandConfig):
    kind: Literal["w_beta", "h_beta", "F_beta"] = "w_beta"
    beta: float = Field(default=0.3, gt=0, lt=1)
    d: int = Field(default=1, ge=1, le=2)
    n: int = 256
    xi_max: int = Field(default=64, ge=1)

    @model_validator(mode="after")
    def _one_dimensional_h(self) -> "ConstructConfig":
        if self.kind == "h_beta" and self.d != 1:
            raise ValueError("h_beta is one-dimensional; use kind=F_beta for d=2")
        return self


class ZakConfig(CommandConfig):
    window: WindowName = "gaussian"
    beta: float = Field(default=0.3, gt=0, lt=1)
    M: int = Field(default=64, ge=2)
    Ms: CsvInts = Field(default_factory=lambda: [16, 32, 64, 128, 256])
    check_tail: bool = True
    exponential_ns: CsvInts = Field(default_factory=list)


class GaborBLTConfig(CommandConfig):
    window: WindowName = "gaussian"
    beta: float = Field(default=0.3, gt=0, lt=1)
    q: float = Field(default=4.0, gt=2)
    ts: CsvFloats = Field(default_factory=lambda: [1.0, 1.5, 2.0])
    radii: CsvFloats = Field(default_factory=lambda: list(DEFAULT_RADII))
    step: float | None = Field(default=None, gt=0)
    ns: CsvInts = Field(default_factory=list)
    tolerance: float = Field(default=CQ_STABILITY_TOL, gt=0)


class GeneratorConfig(CommandConfig):
    generators: Annotated[list[GeneratorName], BeforeValidator(split_csv)] = Field(
        default_factory=lambda: ["h_beta"], min_length=1, max_length=8
    )
    beta: float = Field(default=0.3, gt=0, lt=1)
    width: float = Field(default=1.0, gt=0)
    d: int = Field(default=1, ge=1, le=2)
    lattice: LatticeName = "none"
    m: int = 2
    m1: int = 2
    m2: int = 1


class GramianConfig(GeneratorConfig):
    n: int = 256
    rho: float = Field(default=RANK_TOL, gt=0)
    s: float | None = Field(default=None, gt=0, le=1)
    ns: CsvInts = Field(default_factory=lambda: [64, 128, 256, 512, 1024])
    expect_member: bool | None = None


class SISConfig(GeneratorConfig):
    q: float = Field(default=4.0, gt=2)
    ns: CsvInts = Field(default_factory=lambda: [4, 8, 16, 32])
    n: int | None = None
    ts: CsvFloats = Field(default_factory=list)
    radii: CsvFloats = Field(default_factory=lambda: list(DEFAULT_RADII))
    tolerance: float = Field(default=CQ_STABILITY_TOL, gt=0)
    expect_holds: bool | None = None


class ZerosetConfig(CommandConfig):
    weight: Literal["w_beta", "line", "one", "sine"] = "w_beta"
    beta: float = Field(default=0.3, gt=0, lt=1)
    d: int = Field(default=1, ge=1, le=2)
    n: int = 1024
    scales: CsvInts = Field(default_factory=lambda: [3, 4, 5, 6, 7])
    theta: float = Field(default=0.3, ge=0)
    c0: float | None = Field(default=None, gt=0)
    s: float = Field(default=0.5, gt=0, lt=1)
    r: float = Field(default=2.0, ge=1)
    qs: CsvFloats = Field(default_factory=lambda: [2.5, 3.0, 4.0, 5.0, 6.0])
    sigma: float | None = Field(default=None, ge=0)
    seminorm_route: bool = True
    radii: CsvFloats = Field(default_factory=list)

    @model_validator(mode="after")
    def _line_needs_plane(self) -> "ZerosetConfig":
        if self.weight == "line" and self.d != 2:
            raise ValueError("weight=line needs d=2")
        return self


class FitConfig(CommandConfig):
    csv: Path
    name: str | None = None
    partial_sums: bool = False
    expect: Literal["convergent", "divergent"] | None = None


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class CommandResult:
    passed: bool
    results: dict[str, Any]
    series: list[ScanSeries] = field(default_factory=list)
    tables: dict[str, list[list[str]]] = field(default_factory=dict)


def _all_passed(reports: list[Any]) -> bool:
    return all(r.passed for r in reports if r is not None)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _window(name: WindowName, beta: float) -> GaborWindow:
    if name == "gaussian":
        return gaussian_window()
    if name == "box":
        return box_window()
    return h_beta_window(beta)


def _generator_set(cfg: GeneratorConfig) -> GeneratorSet:
    def build(name: GeneratorName):
        if name == "box":
            return box_generator(d=cfg.d)
        if name == "half_box":
            return box_generator(0.0, 0.5, d=cfg.d)
        if name == "gaussian":
            return gaussian_generator(cfg.width, d=cfg.d)
        if name == "h_beta":
            if cfg.d == 1:
                return h_beta_generator(cfg.beta)
            return tensor_h_beta_generator(cfg.beta, cfg.d)
        return zero_generator(cfg.d)

    return GeneratorSet(generators=tuple(build(name) for name in cfg.generators))


def _lattice(cfg: GeneratorConfig) -> LatticeSpec | None:
    if cfg.lattice == "refinement":
        return LatticeSpec.refinement(cfg.m)
    if cfg.lattice == "diagonal":
        return LatticeSpec.diagonal(cfg.m1, cfg.m2)
    if cfg.lattice == "quincunx":
        return LatticeSpec.quincunx()
    return None


def _radial_w_beta(beta: float, *coords: np.ndarray) -> np.ndarray:
    return w_beta_profile(beta, np.sqrt(sum(c**2 for c in coords)))


def _read_samples(path: Path) -> np.ndarray:
    """Last column of a CSV with a header row."""
    if not path.is_file():
        raise ConfigError(f"samples file not found: {path}")
    with path.open(newline="") as handle:
        rows = [row for row in csv.reader(handle) if row]
    try:
        return np.array([float(row[-1]) for row in rows[1:]])
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric sample: {exc}") from exc


def _zero_weight(cfg: ZerosetConfig, grid: TorusGrid) -> SampleField:
    coords = grid.coordinates()
    if cfg.weight == "w_beta":
        return w_beta(BetaParams(beta=cfg.beta, d=cfg.d), grid)
    if cfg.weight == "line":
        values = w_beta_profile(cfg.beta, np.abs(coords[0]))
    elif cfg.weight == "sine":
        values = np.sin(2 * np.pi * coords[0])
    else:
        values = np.ones(grid.shape)
    return SampleField(grid=grid, values=values)


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------


def run_transform(cfg: TransformConfig) -> CommandResult:
    """Round trip of a random trigonometric polynomial, Parseval, and w_β truncation."""
    grid = TorusGrid(d=cfg.d, n=cfg.n)
    box = FreqBox(d=cfg.d, N=cfg.N)
    rng = np.random.default_rng(cfg.seed)
    c = CoeffField(
        box=box, coeffs=rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)
    )
    f = synthesize(c, grid)
    roundtrip = float(np.max(np.abs(analyze(f, box).coeffs - c.coeffs)))
    parseval = abs(lp_norm(f, 2) - lq_norm(c, 2))
    scale = max(1.0, float(np.max(np.abs(c.coeffs))))

    w = w_beta(BetaParams(beta=cfg.beta, d=cfg.d), grid)
    rebuilt = synthesize(analyze(w, max_box(grid)), grid)
    truncation = float(np.max(np.abs(rebuilt.values - w.values)))
    return CommandResult(
        passed=roundtrip <= TRANSFORM_TOL * scale and parseval <= TRANSFORM_TOL * scale,
        results={
            "roundtrip_error": roundtrip,
            "parseval_defect": parseval,
            "w_beta_truncation_error": truncation,
        },
    )


def run_sobolev(cfg: SobolevConfig) -> CommandResult:
    """Ḣ^s, Ẇ^{s,r} and line-restriction seminorms plus a refinement membership verdict."""
    func: Callable[..., np.ndarray] | None = None
    if cfg.construction == "samples":
        values = _read_samples(cfg.samples)
        grid = TorusGrid(d=1, n=len(values))
        f = SampleField(grid=grid, values=values)
    else:
        grid = TorusGrid(d=cfg.d, n=cfg.n)
        if cfg.construction == "w_beta":
            func = partial(_radial_w_beta, cfg.beta)
        else:
            func = tensor_F_beta(cfg.beta, cfg.d)
        f = sample_function(func, grid)

    results: dict[str, Any] = {
        "hs_seminorm": hs_seminorm(analyze(f, max_box(grid)), cfg.s),
        "slobodeckij_seminorm": higher_slobodeckij_seminorm(f, cfg.s, cfg.r),
    }
    series, membership = [], None
    if cfg.s < 1:
        results["line_restriction_seminorm"] = line_restriction_seminorm(f, cfg.s, cfg.r)
        if func is not None and cfg.ns:
            scan = slobodeckij_refinement_scan(func, grid.d, cfg.s, cfg.r, cfg.ns, cfg.workers)
            membership = membership_report(
                scan, f"W^{{{cfg.s:g},{cfg.r:g}}}", cfg.expect_member
            )
            results["membership"] = membership
            series.append(scan)
    return CommandResult(passed=_all_passed([membership]), results=results, series=series)


def run_multnorm(cfg: MultnormConfig) -> CommandResult:
    """Norm estimates of the multiplier of u ≡ 1, of w_β, or of diag(w_β, 1)."""
    grid = TorusGrid(d=cfg.d, n=cfg.n)
    box = FreqBox(d=cfg.d, N=cfg.N)
    w = w_beta(BetaParams(beta=cfg.beta, d=cfg.d), grid)
    one = SampleField(grid=grid, values=np.ones(grid.shape))

    if cfg.symbol == "matrix":
        U = HermitianField.diagonal([w, one])
        reports = [equivalence_check(U, q, box, cfg.ascent) for q in cfg.qs]
        return CommandResult(passed=_all_passed(reports), results={"equivalence": reports})

    op = build_operator(one if cfg.symbol == "one" else w, box)
    results: dict[str, Any] = {
        "norm_2_2": norm_2_2(op),
        "norm_2_inf": norm_2_inf(op),
        "norm_2_q": [norm_2_q(op, q, cfg.ascent) for q in cfg.qs],
    }
    reports = []
    if cfg.p is not None:
        reports = [pq_reduction_check(op, cfg.p, q, cfg.ascent) for q in cfg.qs]
        results["reduction"] = reports
    return CommandResult(passed=_all_passed(reports), results=results)


def run_tau_scan(cfg: TauScanConfig) -> CommandResult:
    w = w_beta(BetaParams(beta=cfg.beta, d=cfg.d), TorusGrid(d=cfg.d, n=cfg.n))
    report = tau_scan_report(w, cfg.qs, cfg.taus)
    return CommandResult(passed=report.passed, results={"report": report}, series=report.series)


def run_construct(cfg: ConstructConfig) -> CommandResult:
    """Samples of w_β, h_β or F_β, and the transform of h_β on integer frequencies."""
    grid = TorusGrid(d=cfg.d, n=cfg.n)
    if cfg.kind == "w_beta":
        f = w_beta(BetaParams(beta=cfg.beta, d=cfg.d), grid)
    else:
        f = tensor_F_beta(cfg.beta, cfg.d).periodized(grid)

    coords = [c.ravel() for c in grid.coordinates()]
    header = ["x", "y"][: cfg.d] + ["value"]
    rows = [header] + [
        [repr(float(x)) for x in point] + [repr(float(v))]
        for *point, v in zip(*coords, f.values.real.ravel())
    ]
    tables = {"samples": rows}
    results: dict[str, Any] = {
        "kind": cfg.kind,
        "min": float(np.min(f.values.real)),
        "max": float(np.max(f.values.real)),
        "l2_norm": lp_norm(f, 2),
    }
    series = []
    if cfg.kind != "w_beta":
        window = h_beta(cfg.beta)
        xi = np.arange(cfg.xi_max + 1, dtype=float)
        tables["transform"] = [["xi", "transform"]] + [
            [repr(float(k)), repr(float(v))] for k, v in zip(xi, window.transform(xi))
        ]
        decay = transform_decay_series(window)
        results["transform_decay"] = loglog_fit(decay)
        series.append(decay)
    return CommandResult(passed=True, results=results, series=series, tables=tables)


def run_zak(cfg: ZakConfig) -> CommandResult:
    """Zak transform checks, the refinement of min |Zg| and the weighted exponential system."""
    window = _window(cfg.window, cfg.beta)
    report = zak_report(window, cfg.M, cfg.check_tail)
    results: dict[str, Any] = {"report": report}
    series = []
    if cfg.Ms:
        scan = min_modulus_scan(window, cfg.Ms, cfg.check_tail)
        series.append(scan)
        if all(v > 0 for v in scan.values) and len(scan) >= 4:
            results["min_modulus_fit"] = loglog_fit(scan)
    if cfg.exponential_ns:

        def weight(x, y):
            return np.abs(zak_values(window, x, y)) ** 2

        results["exponential_system"] = weighted_exponential_report(
            weight, 2, cfg.exponential_ns
        )
    return CommandResult(passed=report.passed, results=results, series=series)


def run_gabor_blt(cfg: GaborBLTConfig) -> CommandResult:
    """Localization verdicts against the BLT exponents, and optionally D_N across boxes."""
    window = _window(cfg.window, cfg.beta)
    blt = blt_scan(window, cfg.q, cfg.ts, cfg.radii, cfg.step)
    results: dict[str, Any] = {"blt": blt}
    series, scan = [], None
    if cfg.ns:
        scan = gabor_cq_scan(window, cfg.q, cfg.ns, config=cfg.ascent, tolerance=cfg.tolerance)
        results["cq_scan"] = scan
        series.append(scan.series)
    return CommandResult(passed=_all_passed([blt, scan]), results=results, series=series)


def run_gramian(cfg: GramianConfig) -> CommandResult:
    """Gramian ranks, lattice decomposition checks and eigenvalue regularity."""
    H = _generator_set(cfg)
    grid = TorusGrid(d=cfg.d, n=cfg.n)
    P = gramian(H, grid)
    results: dict[str, Any] = {
        "minimal_generator_count": minimal_generator_count(P, cfg.rho),
        "zeta_zero_set": zeta_zero_set(P, cfg.rho),
    }
    checks: list[Any] = []
    series: list[ScanSeries] = []
    lattice = _lattice(cfg)
    if lattice is not None:
        parts = sub_gramians(H, lattice, grid)
        results["decomposition_residual"] = decomposition_residual(P, parts)
        results["rank_formula"] = rank_formula_check(H, lattice, grid)
        results["ev_domination"] = ev_domination_check(P, list(parts.values()), cfg.rho)
        checks += [results["rank_formula"], results["ev_domination"]]
    if cfg.s is not None:
        regularity = sqrt_eigen_regularity_check(
            H, cfg.s, cfg.ns, seed=cfg.seed, expected_member=cfg.expect_member
        )
        results["sqrt_eigen"] = regularity
        checks.append(regularity)
        series.extend(regularity.series)
    return CommandResult(passed=_all_passed(checks), results=results, series=series)


def run_sis_diagnostic(cfg: SISConfig) -> CommandResult:
    H = _generator_set(cfg)
    report = sis_cq_diagnostic(
        H,
        cfg.q,
        cfg.ns,
        n=cfg.n,
        config=cfg.ascent,
        tolerance=cfg.tolerance,
        ts=cfg.ts,
        radii=cfg.radii,
        lattice=_lattice(cfg),
    )
    passed = report.passed if cfg.expect_holds is None else report.holds == cfg.expect_holds
    return CommandResult(passed=passed, results={"report": report}, series=[report.scan.series])


def run_zeroset(cfg: ZerosetConfig) -> CommandResult:
    """Zero-set box counting, the Hausdorff obstruction scan and Poincaré ratios at 0."""
    grid = TorusGrid(d=cfg.d, n=cfg.n)
    w = _zero_weight(cfg, grid)
    zero_set = generalized_zero_set(w, cfg.scales, cfg.theta, cfg.c0)
    scan = hausdorff_obstruction_scan(
        w,
        zero_set,
        cfg.qs,
        cfg.s,
        cfg.r,
        sigma=cfg.sigma,
        seminorm_route=cfg.seminorm_route,
        workers=cfg.workers,
    )
    results: dict[str, Any] = {"hausdorff": scan}
    poincare = None
    if cfg.radii:
        balls = [Ball(center=(0.0,) * cfg.d, radius=t) for t in cfg.radii]
        poincare = poincare_check(w, balls, cfg.s, cfg.r, workers=cfg.workers)
        results["poincare"] = poincare
    counts = [["scale", "tau", "threshold", "count"]] + [
        [str(j), repr(t), repr(eps), str(c)]
        for j, t, eps, c in zip(
            zero_set.scales, zero_set.taus, zero_set.thresholds, zero_set.counts
        )
    ]
    return CommandResult(
        passed=_all_passed([scan, poincare]),
        results=results,
        series=list(scan.series),
        tables={"box_counts": counts},
    )


def run_fit(cfg: FitConfig) -> CommandResult:
    """Re-fit a stored series and classify it."""
    if not cfg.csv.is_file():
        raise ConfigError(f"series file not found: {cfg.csv}")
    series = series_from_csv(cfg.csv, cfg.name)
    assessment = assess_divergence(series)
    results: dict[str, Any] = {"fit": loglog_fit(series), "assessment": assessment}
    verdict = assessment.verdict
    if cfg.partial_sums:
        partial = classify_partial_sums(series)
        results["partial_sums"] = partial
        verdict = partial.verdict
    passed = cfg.expect is None or verdict.value == cfg.expect
    return CommandResult(passed=passed, results=results, series=[series])


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Command:
    config_model: type[CommandConfig]
    runner: Callable[[Any], CommandResult]


COMMANDS: dict[str, Command] = {
    "transform": Command(TransformConfig, run_transform),
    "sobolev": Command(SobolevConfig, run_sobolev),
    "multnorm": Command(MultnormConfig, run_multnorm),
    "tau-scan": Command(TauScanConfig, run_tau_scan),
    "construct": Command(ConstructConfig, run_construct),
    "zak": Command(ZakConfig, run_zak),
    "gabor-blt": Command(GaborBLTConfig, run_gabor_blt),
    "gramian": Command(GramianConfig, run_gramian),
    "sis-diagnostic": Command(SISConfig, run_sis_diagnostic),
    "zeroset": Command(ZerosetConfig, run_zeroset),
    "fit": Command(FitConfig, run_fit),
}


def section_name(command: str) -> str:
    return command.replace("-", "_")
