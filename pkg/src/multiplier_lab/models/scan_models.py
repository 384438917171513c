"""Scan series and exponent fits shared by every threshold experiment."""

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ScanSeries(BaseModel):
    """Ordered (parameter, value) pairs from a τ/q/β/R/N scan."""

    model_config = ConfigDict(frozen=True)

    name: str
    parameters: list[float]
    values: list[float]
    parameter_label: str = "parameter"
    value_label: str = "value"
    aux: dict[str, list[float]] = Field(default_factory=dict)
    metadata: dict[str, str | float | int] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check(self) -> "ScanSeries":
        if len(self.parameters) != len(self.values):
            raise ValueError("parameters and values must have equal length")
        for key, column in self.aux.items():
            if len(column) != len(self.parameters):
                raise ValueError(f"aux column '{key}' has the wrong length")
        params = np.asarray(self.parameters, dtype=float)
        if np.any(params <= 0):
            raise ValueError("parameters must be positive")
        if len(params) > 1:
            steps = np.diff(params)
            if not (np.all(steps > 0) or np.all(steps < 0)):
                raise ValueError("parameters must be strictly monotone")
        if any(v < 0 or not np.isfinite(v) for v in self.values):
            raise ValueError("values must be finite and nonnegative")
        return self

    def __len__(self) -> int:
        return len(self.parameters)

    @property
    def zero_flags(self) -> list[bool]:
        """Exact-zero markers; zeros are excluded from log-log fits."""
        return [v == 0.0 for v in self.values]

    def positive_part(self) -> "ScanSeries":
        keep = [i for i, v in enumerate(self.values) if v > 0]
        return self.model_copy(
            update={
                "parameters": [self.parameters[i] for i in keep],
                "values": [self.values[i] for i in keep],
                "aux": {k: [col[i] for i in keep] for k, col in self.aux.items()},
            }
        )

    def rescaled(self, factor: float) -> "ScanSeries":
        """Same values against parameters multiplied by ``factor``."""
        return self.model_copy(update={"parameters": [p * factor for p in self.parameters]})


class ExponentFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    slope: float
    intercept: float
    r_squared: float = Field(ge=0.0, le=1.0)
    n_points: int = Field(ge=4)


class DivergenceVerdict(str, Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"
    INCONCLUSIVE = "inconclusive"


class DivergenceAssessment(BaseModel):
    """Verdict plus the fits that produced it."""

    model_config = ConfigDict(frozen=True)

    verdict: DivergenceVerdict
    fit: ExponentFit | None = None            # None when the series has zero values
    increment_fit: ExponentFit | None = None   # dyadic-increment exponent, when computed
    log_guard: bool = False                    # True when the logarithmic guard decided
