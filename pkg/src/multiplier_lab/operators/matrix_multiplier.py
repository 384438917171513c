"""Hermitian K×K matrix symbols: pointwise eigendecomposition, block multiplier
operators and the scalar/matrix norm equivalence."""

import logging
from typing import Any

import numpy as np
from pydantic import Field, field_serializer, model_validator

from multiplier_lab.config import AscentConfig
from multiplier_lab.core.exceptions import DomainError
from multiplier_lab.core.grid import analyze
from multiplier_lab.models.field_models import (
    ArrayModel,
    FreqBox,
    SampleField,
    TorusGrid,
    freeze_array,
    serialize_array,
)
from multiplier_lab.models.report_models import (
    AverageBoundReport,
    CheckFinding,
    EquivalenceReport,
    FindingSeverity,
    MixedNormEstimate,
)
from multiplier_lab.operators.ascent import DEFAULT_ASCENT, estimate_mixed_norm
from multiplier_lab.operators.exceptions import (
    IncompatibleBoxError,
    NonHermitianError,
    ReconstructionError,
)
from multiplier_lab.operators.multiplier import (
    build_operator,
    convolution_matrix,
    structured_witnesses,
)

logger = logging.getLogger(__name__)

MAX_BLOCK = 8
HERMITIAN_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-9
EQUIVALENCE_SLACK = 0.05


class HermitianField(ArrayModel):
    """A K×K Hermitian matrix at every sample of a torus grid."""

    K: int = Field(ge=1, le=MAX_BLOCK)
    grid: TorusGrid
    entries: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, data: Any) -> Any:
        if isinstance(data, dict) and "entries" in data:
            data = {**data, "entries": freeze_array(data["entries"])}
        return data

    @model_validator(mode="after")
    def _check(self) -> "HermitianField":
        expected = (*self.grid.shape, self.K, self.K)
        if self.entries.shape != expected:
            raise ValueError(f"entries have shape {self.entries.shape}, expected {expected}")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("entries must be finite")
        return self

    @field_serializer("entries")
    def _dump_entries(self, entries: np.ndarray):
        return serialize_array(entries)

    @classmethod
    def from_entries(
        cls, K: int, grid: TorusGrid, entries: Any, tol: float = HERMITIAN_TOL
    ) -> "HermitianField":
        """Validate and symmetrize raw matrices.

        Raises:
            NonHermitianError: If ‖E - E*‖_max exceeds ``tol`` relative to the entries.
        """
        entries = np.asarray(entries, dtype=complex).reshape(*grid.shape, K, K)
        adjoint = np.conj(np.swapaxes(entries, -1, -2))
        defect = float(np.max(np.abs(entries - adjoint), initial=0.0))
        scale = max(1.0, float(np.max(np.abs(entries), initial=0.0)))
        if defect > tol * scale:
            raise NonHermitianError(f"Hermitian defect {defect:.3g} exceeds {tol:g}")
        return cls(K=K, grid=grid, entries=(entries + adjoint) / 2)

    @classmethod
    def diagonal(cls, fields: list[SampleField]) -> "HermitianField":
        """diag(u_1, ..., u_K) from real scalar fields on a common grid."""
        grid = fields[0].grid
        K = len(fields)
        entries = np.zeros((*grid.shape, K, K), dtype=complex)
        for k, f in enumerate(fields):
            entries[..., k, k] = f.values.real
        return cls(K=K, grid=grid, entries=entries)

    def entry(self, i: int, j: int) -> SampleField:
        return SampleField(grid=self.grid, values=self.entries[..., i, j])


class EigenTracks(ArrayModel):
    """Pointwise λ_1 >= ... >= λ_K and orthonormal eigenvector columns."""

    grid: TorusGrid
    eigenvalues: np.ndarray        # shape grid.shape + (K,)
    vectors: np.ndarray            # shape grid.shape + (K, K), column k pairs with λ_k

    @field_serializer("eigenvalues", "vectors")
    def _dump(self, values: np.ndarray):
        return serialize_array(values)

    @property
    def K(self) -> int:
        return self.eigenvalues.shape[-1]

    def lambda_field(self, k: int) -> SampleField:
        return SampleField(grid=self.grid, values=self.eigenvalues[..., k])

    def lambda_fields(self) -> list[SampleField]:
        return [self.lambda_field(k) for k in range(self.K)]

    def reconstruct(self) -> np.ndarray:
        """Q Λ Q* at every sample."""
        scaled = self.vectors * self.eigenvalues[..., None, :]
        return scaled @ np.conj(np.swapaxes(self.vectors, -1, -2))


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the first nonzero component of every eigenvector real and positive."""
    magnitude = np.abs(vectors)
    threshold = 1e-8 * np.max(magnitude, axis=-2, keepdims=True)
    first = np.argmax(magnitude > threshold, axis=-2)[..., None, :]
    component = np.take_along_axis(vectors, first, axis=-2)
    phase = component / np.where(np.abs(component) > 0, np.abs(component), 1.0)
    return vectors * np.conj(phase)


def eig_decompose(U: HermitianField, tol: float = RECONSTRUCTION_TOL) -> EigenTracks:
    """Batched Hermitian eigendecomposition, sorted descending with fixed phases.

    Raises:
        ReconstructionError: If ‖U - QΛQ*‖_max exceeds ``tol`` relative to ‖U‖_max.
    """
    values, vectors = np.linalg.eigh(U.entries)
    values = values[..., ::-1]
    vectors = _fix_phases(vectors[..., ::-1])
    tracks = EigenTracks(
        grid=U.grid, eigenvalues=freeze_array(values, float), vectors=freeze_array(vectors)
    )
    error = float(np.max(np.abs(tracks.reconstruct() - U.entries), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(U.entries), initial=0.0)))
    if error > tol * scale:
        raise ReconstructionError(f"reconstruction error {error:.3g} exceeds {tol:g}")
    logger.debug("eig_decompose: K=%d on %d samples, error %.2g", U.K, U.grid.size, error)
    return tracks


def pointwise_trace(U: HermitianField) -> SampleField:
    return SampleField(grid=U.grid, values=np.trace(U.entries, axis1=-2, axis2=-1))


def pointwise_det(U: HermitianField) -> SampleField:
    return SampleField(grid=U.grid, values=np.linalg.det(U.entries))


def unitary_conjugate(U: HermitianField, V: np.ndarray, tol: float = 1e-10) -> HermitianField:
    """V* U(x) V for a constant unitary V."""
    V = np.asarray(V, dtype=complex)
    if V.shape != (U.K, U.K) or np.max(np.abs(V.conj().T @ V - np.eye(U.K))) > tol:
        raise DomainError(f"V must be a {U.K}x{U.K} unitary matrix")
    return HermitianField.from_entries(U.K, U.grid, V.conj().T @ U.entries @ V, tol=1e-9)


# ---------------------------------------------------------------------------
# block operators
# ---------------------------------------------------------------------------


class BlockOperator(ArrayModel):
    """(T_U A)_i(k) = Σ_j Σ_m Û_ij(k - m) A_j(m); rows and columns component-major."""

    K: int
    in_box: FreqBox
    out_box: FreqBox
    matrix: np.ndarray

    @field_serializer("matrix")
    def _dump_matrix(self, matrix: np.ndarray):
        return serialize_array(matrix)


def build_block_operator(
    U: HermitianField, in_box: FreqBox, out_box: FreqBox | None = None
) -> BlockOperator:
    out_box = in_box if out_box is None else out_box
    if in_box.d != U.grid.d or out_box.d != U.grid.d:
        raise IncompatibleBoxError(f"boxes do not match field dimension d={U.grid.d}")
    symbol_box = FreqBox(d=U.grid.d, N=in_box.N + out_box.N)
    if not symbol_box.fits(U.grid):
        raise IncompatibleBoxError(f"grid n={U.grid.n} cannot resolve symbol box N={symbol_box.N}")
    rows = []
    for i in range(U.K):
        row = [
            convolution_matrix(analyze(U.entry(i, j), symbol_box), in_box, out_box)
            for j in range(U.K)
        ]
        rows.append(row)
    matrix = np.block(rows)
    return BlockOperator(K=U.K, in_box=in_box, out_box=out_box, matrix=freeze_array(matrix))


def block_gram(W: HermitianField, box: FreqBox) -> np.ndarray:
    """Gram matrix of {e_k ⊗ e_j} in L²_W: G[(i,k),(j,m)] = Ŵ_ij(k - m)."""
    return build_block_operator(W, box, box).matrix


def block_witnesses(
    K: int, box: FreqBox, center: tuple[float, ...] | None = None
) -> dict[str, np.ndarray]:
    """Structured witnesses placed in one component at a time."""
    witnesses = {}
    for label, vector in structured_witnesses(box, center).items():
        for j in range(K):
            stacked = np.zeros(K * box.size, dtype=complex)
            stacked[j * box.size : (j + 1) * box.size] = vector
            witnesses[f"{label}@{j}"] = stacked
    return witnesses


def matrix_norm_2_q(
    U: HermitianField,
    q: float,
    in_box: FreqBox,
    out_box: FreqBox | None = None,
    config: AscentConfig = DEFAULT_ASCENT,
) -> MixedNormEstimate:
    """‖T_U‖ from [ℓ²]^K to [ℓ^q]^K, with ‖G‖ = (Σ_k ‖g_k‖_q^q)^{1/q}."""
    if not q >= 2:
        raise DomainError(f"q must be >= 2, got {q}")
    op = build_block_operator(U, in_box, out_box)
    return estimate_mixed_norm(op.matrix, 2.0, q, config, block_witnesses(U.K, in_box))


def _scalar_norm(field: SampleField, q: float, box: FreqBox, config: AscentConfig):
    op = build_operator(field, box)
    return estimate_mixed_norm(op.matrix, 2.0, q, config, structured_witnesses(box))


def equivalence_check(
    U: HermitianField,
    q: float,
    in_box: FreqBox,
    config: AscentConfig = DEFAULT_ASCENT,
    delta: float = EQUIVALENCE_SLACK,
) -> EquivalenceReport:
    """Compare the block norm of U with the scalar norms of its eigenvalue fields.

    Checks max_k lower(λ_k) <= K·upper(U)(1+δ) and lower(U) <= √K·max_k upper(λ_k)(1+δ).
    """
    tracks = eig_decompose(U)
    eigen = [_scalar_norm(lam, q, in_box, config) for lam in tracks.lambda_fields()]
    block = matrix_norm_2_q(U, q, in_box, config=config)

    scalar_side = max(e.lower for e in eigen)
    scalar_bound = U.K * block.upper * (1 + delta)
    matrix_bound = np.sqrt(U.K) * max(e.upper for e in eigen) * (1 + delta)

    findings = []
    if scalar_side > scalar_bound:
        findings.append(
            CheckFinding(
                code="eigenvalue_norm_exceeds_block",
                severity=FindingSeverity.ERROR,
                message=(
                    f"max_k lower(λ_k)={scalar_side:.6g} > "
                    f"K·upper(U)(1+δ)={scalar_bound:.6g}"
                ),
                data={"lhs": scalar_side, "rhs": scalar_bound},
            )
        )
    if block.lower > matrix_bound:
        findings.append(
            CheckFinding(
                code="block_norm_exceeds_eigenvalues",
                severity=FindingSeverity.ERROR,
                message=(
                    f"lower(U)={block.lower:.6g} > "
                    f"√K·max_k upper(λ_k)(1+δ)={matrix_bound:.6g}"
                ),
                data={"lhs": block.lower, "rhs": matrix_bound},
            )
        )
    return EquivalenceReport(
        passed=not findings,
        findings=findings,
        K=U.K,
        q=q,
        delta=delta,
        matrix_lower=block.lower,
        matrix_upper=block.upper,
        eigen_lower=[e.lower for e in eigen],
        eigen_upper=[e.upper for e in eigen],
        scalar_side=scalar_side,
        matrix_side=block.lower,
    )


def min_eigenvalue_average_bound(
    tracks: EigenTracks,
    U: HermitianField,
    cubes: list[tuple[tuple[float, ...], float]],
) -> AverageBoundReport:
    """avg_I min_k |λ_k| <= (avg_I |det U|)^{1/K} on each cube I = center + [-τ, τ]^d."""
    smallest = np.min(np.abs(tracks.eigenvalues), axis=-1)
    det = np.abs(pointwise_det(U).values)
    coords = U.grid.coordinates()
    findings, max_excess = [], -np.inf
    for center, tau in cubes:
        inside = np.all(
            [np.abs(((c - x0 + 0.5) % 1.0) - 0.5) <= tau for c, x0 in zip(coords, center)],
            axis=0,
        )
        if not np.any(inside):
            raise DomainError(f"cube at {center} with half-width {tau} holds no samples")
        lhs = float(np.mean(smallest[inside]))
        rhs = float(np.mean(det[inside]) ** (1.0 / U.K))
        max_excess = max(max_excess, lhs - rhs)
        if lhs > rhs * (1 + 1e-12) + 1e-15:
            findings.append(
                CheckFinding(
                    code="average_bound_violated",
                    severity=FindingSeverity.ERROR,
                    message=f"cube {center}, τ={tau:g}: {lhs:.6g} > {rhs:.6g}",
                    data={"lhs": lhs, "rhs": rhs},
                )
            )
    return AverageBoundReport(
        passed=not findings, findings=findings, cube_count=len(cubes), max_excess=max_excess
    )
