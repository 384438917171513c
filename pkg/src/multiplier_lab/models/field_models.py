"""Sampling grids, frequency boxes and the fields living on them."""

from typing import Any

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)


def freeze_array(values: Any, dtype: type = complex) -> np.ndarray:
    """Return a read-only contiguous copy of ``values`` with the given dtype."""
    array = np.array(values, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


def serialize_array(values: np.ndarray) -> dict[str, list] | list:
    """JSON-friendly form of an array: complex arrays split into re/im lists."""
    if np.iscomplexobj(values):
        return {"re": np.real(values).tolist(), "im": np.imag(values).tolist()}
    return np.asarray(values).tolist()


class ArrayModel(BaseModel):
    """Frozen base for models that carry numpy arrays."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class TorusGrid(BaseModel):
    """Uniform grid x_j = -1/2 + j/n per axis on the torus [-1/2, 1/2)^d."""

    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=1, le=2)
    n: int = Field(ge=4)

    @field_validator("n")
    @classmethod
    def _power_of_two(cls, n: int) -> int:
        if n & (n - 1):
            raise ValueError(f"n must be a power of two, got {n}")
        return n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    def axis(self) -> np.ndarray:
        return -0.5 + np.arange(self.n) / self.n

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of shape ``self.shape``, one per axis."""
        axis = self.axis()
        return tuple(np.meshgrid(*([axis] * self.d), indexing="ij"))

    def radius(self) -> np.ndarray:
        """Euclidean distance to the origin in the chart [-1/2, 1/2)^d."""
        return np.sqrt(sum(c**2 for c in self.coordinates()))

    def nearest_index(self, point: tuple[float, ...]) -> tuple[int, ...]:
        """Grid index of the sample closest (periodically) to ``point``."""
        if len(point) != self.d:
            raise ValueError(f"point has {len(point)} coordinates, grid has d={self.d}")
        return tuple(int(round((p + 0.5) * self.n)) % self.n for p in point)


class FreqBox(BaseModel):
    """Symmetric frequency box {-N, ..., N}^d."""

    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=1, le=2)
    N: int = Field(ge=0)

    @property
    def width(self) -> int:
        return 2 * self.N + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.width,) * self.d

    @property
    def size(self) -> int:
        return self.width**self.d

    def indices(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def wavevectors(self) -> np.ndarray:
        """Integer frequencies of the box, shape ``(size, d)`` in C order."""
        grids = np.meshgrid(*([self.indices()] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def norms(self) -> np.ndarray:
        """Euclidean |k| for every k in the box, shape ``self.shape``."""
        grids = np.meshgrid(*([self.indices()] * self.d), indexing="ij")
        return np.sqrt(sum(g.astype(float) ** 2 for g in grids))

    def fits(self, grid: TorusGrid) -> bool:
        return self.d == grid.d and self.width <= grid.n


class SampleField(ArrayModel):
    """Complex samples of a function on a TorusGrid."""

    grid: TorusGrid
    values: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, data: Any) -> Any:
        if isinstance(data, dict) and "values" in data and "grid" in data:
            grid = data["grid"]
            shape = grid.shape if isinstance(grid, TorusGrid) else TorusGrid(**grid).shape
            values = np.asarray(data["values"], dtype=complex)
            if values.size != int(np.prod(shape)):
                raise ValueError(f"expected {int(np.prod(shape))} samples, got {values.size}")
            if not np.all(np.isfinite(values)):
                raise ValueError("sample values must be finite")
            data = {**data, "values": freeze_array(values.reshape(shape))}
        return data

    @field_serializer("values")
    def _dump_values(self, values: np.ndarray):
        return serialize_array(values)

    @property
    def d(self) -> int:
        return self.grid.d

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.values.imag), initial=0.0) <= tol)

    def abs(self) -> "SampleField":
        return SampleField(grid=self.grid, values=np.abs(self.values))

    def map(self, func) -> "SampleField":
        """Apply an elementwise function to the samples."""
        return SampleField(grid=self.grid, values=func(self.values))


class CoeffField(ArrayModel):
    """Fourier coefficients on a FreqBox."""

    box: FreqBox
    coeffs: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, data: Any) -> Any:
        if isinstance(data, dict) and "coeffs" in data and "box" in data:
            box = data["box"]
            shape = box.shape if isinstance(box, FreqBox) else FreqBox(**box).shape
            coeffs = np.asarray(data["coeffs"], dtype=complex)
            if coeffs.size != int(np.prod(shape)):
                raise ValueError(f"expected {int(np.prod(shape))} coefficients, got {coeffs.size}")
            if not np.all(np.isfinite(coeffs)):
                raise ValueError("coefficients must be finite")
            data = {**data, "coeffs": freeze_array(coeffs.reshape(shape))}
        return data

    @field_serializer("coeffs")
    def _dump_coeffs(self, coeffs: np.ndarray):
        return serialize_array(coeffs)

    @property
    def d(self) -> int:
        return self.box.d

    def at(self, k: tuple[int, ...] | int) -> complex:
        """Coefficient at frequency ``k``; zero outside the box."""
        k = (k,) if isinstance(k, int) else tuple(k)
        if any(abs(ki) > self.box.N for ki in k):
            return 0j
        return complex(self.coeffs[tuple(ki + self.box.N for ki in k)])

    def flat(self) -> np.ndarray:
        return self.coeffs.ravel()

    def is_conjugate_symmetric(self, tol: float = 1e-12) -> bool:
        """True when c(-k) = conj(c(k)) for every k in the box."""
        reflected = self.coeffs[(slice(None, None, -1),) * self.d]
        return bool(np.max(np.abs(reflected - np.conj(self.coeffs))) <= tol)

    def restrict(self, box: FreqBox) -> "CoeffField":
        """Coefficients on a smaller (or equal) centred box."""
        if box.d != self.d or box.N > self.box.N:
            raise ValueError(f"cannot restrict N={self.box.N} to N={box.N}")
        offset = self.box.N - box.N
        window = (slice(offset, offset + box.width),) * self.d
        return CoeffField(box=box, coeffs=self.coeffs[window])


class Ball(BaseModel):
    """Periodic ball B_radius(center) on the torus."""

    model_config = ConfigDict(frozen=True)

    center: tuple[float, ...]
    radius: float = Field(gt=0, lt=0.5)

    @property
    def d(self) -> int:
        return len(self.center)


class ScaleWindow(BaseModel):
    """Grid pairs considered by a Hölder quotient.

    Pairs must lie in ``ball`` (when given) and have separation in
    [``min_separation``, ``max_separation``].
    """

    model_config = ConfigDict(frozen=True)

    ball: Ball | None = None
    min_separation: float = Field(default=0.0, ge=0)
    max_separation: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _ordered(self) -> "ScaleWindow":
        if self.max_separation is not None and self.max_separation < self.min_separation:
            raise ValueError("max_separation must be >= min_separation")
        return self

    @classmethod
    def band(cls, tau: float, center: tuple[float, ...] | None = None) -> "ScaleWindow":
        """Separations in [tau/2, tau], inside B_tau(center) when a center is given."""
        ball = Ball(center=center, radius=tau) if center is not None else None
        return cls(ball=ball, min_separation=tau / 2, max_separation=tau)
