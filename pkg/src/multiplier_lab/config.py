"""Shared numeric thresholds and the key-value run configuration loader."""

from pathlib import Path
from typing import Annotated, Any

from dotenv import dotenv_values
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field

DEFAULT_SEED = 0xC0FFEE

# Global scan thresholds; every exponent test reads these
SLOPE_TOL = 0.05
R2_MIN = 0.9
INCREMENT_TOL = 0.02

# Slope tolerance for "D_N stays positive" verdicts; the Gaussian Gabor weight
# gives D_N ~ (A + b log N)^(-1/2) for large q
CQ_STABILITY_TOL = 0.25


class FitThresholds(BaseModel):
    model_config = ConfigDict(frozen=True)

    slope_tol: float = Field(default=SLOPE_TOL, gt=0)
    r2_min: float = Field(default=R2_MIN, ge=0, le=1)
    increment_tol: float = Field(default=INCREMENT_TOL, ge=0)


FIT_THRESHOLDS = FitThresholds()


class AscentConfig(BaseModel):
    """Settings for the mixed-norm power method."""

    model_config = ConfigDict(frozen=True)

    restarts: int = Field(default=20, ge=0)
    max_iter: int = Field(default=10_000, ge=1)
    tol: float = Field(default=1e-9, gt=0)
    seed: int = DEFAULT_SEED
    workers: int = Field(default=1, ge=1)


def split_csv(value: Any) -> Any:
    """Split a comma-separated string into items; pass other values through."""
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


CsvFloats = Annotated[list[float], BeforeValidator(split_csv)]
CsvInts = Annotated[list[int], BeforeValidator(split_csv)]


def load_config_file(path: str | Path) -> dict[str, dict[str, str]]:
    """Read a key-value config file into per-section dictionaries.

    Keys of the form ``section.key`` land in ``section``; bare keys land in the
    ``""`` (global) section. The process environment is never read.

    Args:
        path: Path to the config file.

    Returns:
        Mapping section name -> {key: raw string value}.

    Raises:
        FileNotFoundError: If the file does not exist.
    """
    resolved = Path(path)
    if not resolved.is_file():
        raise FileNotFoundError(f"Config file not found: {path}")

    sections: dict[str, dict[str, str]] = {}
    for raw_key, raw_value in dotenv_values(resolved).items():
        section, _, key = raw_key.rpartition(".")
        section = section.replace("-", "_")
        sections.setdefault(section, {})[key] = "" if raw_value is None else raw_value
    return sections
