"""Report models for norm estimates, threshold scans and structural checks."""

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator

from multiplier_lab.models.field_models import ArrayModel, serialize_array
from multiplier_lab.models.scan_models import DivergenceAssessment, ExponentFit, ScanSeries

SCHEMA_VERSION = "1.0.0"


class FindingSeverity(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


class CheckFinding(BaseModel):
    model_config = ConfigDict(frozen=False)

    code: str                     # short machine-readable tag, e.g. "rank_formula_violated"
    severity: FindingSeverity
    message: str
    data: dict[str, float | int | str | bool] = Field(default_factory=dict)


class CheckReport(BaseModel):
    """Common shape of every verdict-bearing report."""

    model_config = ConfigDict(frozen=False)

    passed: bool
    findings: list[CheckFinding] = Field(default_factory=list)

    @property
    def error_count(self) -> int:
        return sum(1 for f in self.findings if f.severity == FindingSeverity.ERROR)

    @property
    def warning_count(self) -> int:
        return sum(1 for f in self.findings if f.severity == FindingSeverity.WARNING)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


class MixedNormEstimate(ArrayModel):
    """Two-sided estimate of a truncated (p,q) operator norm."""

    lower: float = Field(ge=0)          # certified: ratio of an explicit witness
    upper: float = Field(ge=0)          # best value found by the ascent
    p: float
    q: float
    iterations: int = 0
    converged: bool = True
    witness: np.ndarray
    witness_label: str = ""

    @model_validator(mode="after")
    def _ordered(self) -> "MixedNormEstimate":
        if self.lower > self.upper * (1 + 1e-9) + 1e-300:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        return self

    @field_serializer("witness")
    def _dump_witness(self, witness: np.ndarray):
        return serialize_array(witness)


class SpectralNormEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    method: str                   # "svd" | "power_iteration"
    iterations: int = 0
    converged: bool = True


class WeightedConstantEstimate(BaseModel):
    """Best constant D in D‖a‖_q ≤ ‖Σ a_k e_k‖_{L²_w} on one truncated box."""

    model_config = ConfigDict(frozen=True)

    q: float
    N: int
    value: float                  # min over all explicit witnesses
    structured: float             # min over the structured family alone
    ascent: float                 # ratio of the best ascent iterate
    exact: bool = False           # True for q = 2 (smallest Gram eigenvalue)
    converged: bool = True
    witness_label: str = ""


class TauScanVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    q: float
    ratio_slope: float
    obstruction: bool


class TauScanReport(CheckReport):
    mass_fit: ExponentFit
    critical_q: float | None      # d / (d - mass slope), None when slope >= d
    verdicts: list[TauScanVerdict] = Field(default_factory=list)
    series: list[ScanSeries] = Field(default_factory=list)


class ReductionReport(CheckReport):
    p: float
    q: float
    q_tilde: float
    norm_pq: float
    norm_2_q_tilde: float
    ratio: float                  # empirical constant c = norm_{2,q̃} / norm_{p,q}


class EquivalenceReport(CheckReport):
    K: int
    q: float
    delta: float
    matrix_lower: float
    matrix_upper: float
    eigen_lower: list[float]
    eigen_upper: list[float]
    scalar_side: float            # max_k lower(λ_k) compared to K·upper(U)(1+δ)
    matrix_side: float            # lower(U) compared to √K·max_k upper(λ_k)(1+δ)


class AverageBoundReport(CheckReport):
    cube_count: int
    max_excess: float             # max over cubes of lhs - rhs (≤ 0 when the bound holds)


# ---------------------------------------------------------------------------
# analysis
# ---------------------------------------------------------------------------


class MembershipReport(CheckReport):
    """Refinement-based membership verdict for one smoothness functional."""

    quantity: str
    assessment: DivergenceAssessment
    series: ScanSeries
    expected_member: bool | None = None


class ZeroSetEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str = "box-counting estimate"
    scales: list[int]
    taus: list[float]
    thresholds: list[float]
    counts: list[int]
    candidates: list[list[tuple[int, ...]]]
    fit: ExponentFit | None = None
    dimension: float | None = None
    nested: bool = True
    count_monotone: bool = True
    empty_at_fine_scales: bool = False


class PoincareReport(CheckReport):
    s: float
    r: float
    radii: list[float]
    ratios: list[float]
    fit: ExponentFit | None = None
    empirical_constant: float


class HausdorffScanRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    q: float
    exponent: float               # r[d(1/2 + 1/r - 1/q) - s]
    expected_binding: bool        # exponent ≤ σ
    binding: bool                 # measured when ``measured``, else expected_binding
    measured: bool = False
    chain_slope: float | None = None       # slope of Σ_k τ^exponent over the candidates
    seminorm_slope: float | None = None
    seminorm_contradiction: bool | None = None

    @property
    def obstruction(self) -> bool:
        if self.seminorm_contradiction is not None:
            return self.seminorm_contradiction
        return self.binding


class HausdorffScanReport(CheckReport):
    sigma: float
    sigma_estimated: bool
    s: float
    r: float
    threshold_q: float | None
    alternative_threshold_q: float | None
    vacuous: bool = False
    q_flip: float | None = None
    expected_q_flip: float | None = None
    rows: list[HausdorffScanRow] = Field(default_factory=list)
    zero_set: ZeroSetEstimate | None = None
    tau_scan_agrees: bool | None = None      # σ = 0 only
    series: list[ScanSeries] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------


class ZakMinimum(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    x: float
    y: float
    cell: tuple[int, int]


class ZakReport(CheckReport):
    M: int
    quasi_periodicity_residual: float
    modulus_periodicity_residual: float
    unitarity_defect: float
    minimum: ZakMinimum
    zero_candidates: list[tuple[int, int]] = Field(default_factory=list)


class WeightedConstantScan(CheckReport):
    q: float
    estimates: list[WeightedConstantEstimate]
    series: ScanSeries
    fit: ExponentFit | None = None        # four boxes or more
    slope: float | None = None
    stable: bool
    tolerance: float


class LocalizationVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    side: str                     # "time" | "frequency"
    t: float
    finite: bool
    assessment: DivergenceAssessment | None = None   # None when the integral is exactly bounded


class BLTReport(CheckReport):
    q: float
    symmetric_threshold: float    # 4/q'
    region_lower: float           # 4(q-1)/(q+2)
    localization: list[LocalizationVerdict] = Field(default_factory=list)
    forbidden_pairs: list[tuple[float, float]] = Field(default_factory=list)


class ExponentialSystemReport(CheckReport):
    ess_inf: list[float]
    ess_sup: list[float]
    riesz_basis: bool
    exact: bool
    reciprocal_assessment: DivergenceAssessment


class RankFormulaReport(CheckReport):
    index: int
    fractions: dict[str, float]   # rank tolerance -> fraction of samples where the formula holds
    verdict: str                  # "gamma_invariant" | "not_invariant" | "undetermined"
    degenerate: bool = False
    J: int = 0
    nontrivial: bool = False


class MinimalGeneratorCount(BaseModel):
    model_config = ConfigDict(frozen=True)

    J: int
    rank_histogram: dict[int, int]
    outlier_guard_applied: bool = False


class EVDominationReport(CheckReport):
    checked: int
    skipped: int
    max_excess: float             # max of μ - min η over checked samples


class SqrtEigenReport(CheckReport):
    s: float
    pair_count: int
    max_bound_excess: float
    memberships: list[DivergenceAssessment] = Field(default_factory=list)
    series: list[ScanSeries] = Field(default_factory=list)


class ZetaZeroSetReport(CheckReport):
    J: int
    zero_fraction: float
    boundary_zero: bool


class SISCqReport(CheckReport):
    q: float
    scan: WeightedConstantScan
    holds: bool
    localization: list[LocalizationVerdict] = Field(default_factory=list)
    rank_formula: RankFormulaReport | None = None
