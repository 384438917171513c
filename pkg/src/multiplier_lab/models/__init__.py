"""Data models for multiplier_lab."""

from multiplier_lab.models.field_models import (
    ArrayModel,
    Ball,
    CoeffField,
    FreqBox,
    SampleField,
    ScaleWindow,
    TorusGrid,
)
from multiplier_lab.models.report_models import (
    SCHEMA_VERSION,
    AverageBoundReport,
    BLTReport,
    CheckFinding,
    CheckReport,
    EquivalenceReport,
    EVDominationReport,
    ExponentialSystemReport,
    FindingSeverity,
    HausdorffScanReport,
    HausdorffScanRow,
    LocalizationVerdict,
    MembershipReport,
    MinimalGeneratorCount,
    MixedNormEstimate,
    PoincareReport,
    RankFormulaReport,
    ReductionReport,
    SISCqReport,
    SpectralNormEstimate,
    SqrtEigenReport,
    TauScanReport,
    TauScanVerdict,
    WeightedConstantEstimate,
    WeightedConstantScan,
    ZakMinimum,
    ZakReport,
    ZeroSetEstimate,
    ZetaZeroSetReport,
)
from multiplier_lab.models.scan_models import (
    DivergenceAssessment,
    DivergenceVerdict,
    ExponentFit,
    ScanSeries,
)

__all__ = [
    "ArrayModel",
    "AverageBoundReport",
    "Ball",
    "BLTReport",
    "CheckFinding",
    "CheckReport",
    "CoeffField",
    "DivergenceAssessment",
    "DivergenceVerdict",
    "EquivalenceReport",
    "EVDominationReport",
    "ExponentFit",
    "ExponentialSystemReport",
    "FindingSeverity",
    "FreqBox",
    "HausdorffScanReport",
    "HausdorffScanRow",
    "LocalizationVerdict",
    "MembershipReport",
    "MinimalGeneratorCount",
    "MixedNormEstimate",
    "PoincareReport",
    "RankFormulaReport",
    "ReductionReport",
    "SampleField",
    "ScaleWindow",
    "ScanSeries",
    "SCHEMA_VERSION",
    "SISCqReport",
    "SpectralNormEstimate",
    "SqrtEigenReport",
    "TauScanReport",
    "TauScanVerdict",
    "TorusGrid",
    "WeightedConstantEstimate",
    "WeightedConstantScan",
    "ZakMinimum",
    "ZakReport",
    "ZeroSetEstimate",
    "ZetaZeroSetReport",
]
