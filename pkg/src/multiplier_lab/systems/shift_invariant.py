"""Systems of integer translates: Gramians, extra invariance and the (C_q) property.

Generators are given by their Fourier transforms Ĥ = (ĥ_1, ..., ĥ_K). The Gramian
P(x) = Σ_ℓ Ĥ(x+ℓ)Ĥ(x+ℓ)* is truncated to |ℓ|_∞ <= kmax, where every generator is
certified below the tail tolerance.
"""

import logging
import math
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from multiplier_lab.analysis.constructions import HBetaWindow, TensorFBeta
from multiplier_lab.analysis.sobolev import higher_slobodeckij_seminorm, slobodeckij_seminorm
from multiplier_lab.config import (
    CQ_STABILITY_TOL,
    DEFAULT_SEED,
    FIT_THRESHOLDS,
    AscentConfig,
    FitThresholds,
)
from multiplier_lab.core.exceptions import DomainError
from multiplier_lab.core.fit import classify_partial_sums
from multiplier_lab.models.field_models import FreqBox, SampleField, TorusGrid
from multiplier_lab.models.report_models import (
    CheckFinding,
    EVDominationReport,
    FindingSeverity,
    LocalizationVerdict,
    MinimalGeneratorCount,
    RankFormulaReport,
    SISCqReport,
    SqrtEigenReport,
    ZetaZeroSetReport,
)
from multiplier_lab.models.scan_models import DivergenceVerdict, ScanSeries
from multiplier_lab.operators.ascent import DEFAULT_ASCENT
from multiplier_lab.operators.matrix_multiplier import HermitianField, block_gram, block_witnesses
from multiplier_lab.operators.multiplier import weighted_lower_constant
from multiplier_lab.systems.exceptions import (
    DecayCertificateError,
    DegenerateGramianError,
    LatticeError,
)
from multiplier_lab.systems.zak import (
    DEFAULT_RADII,
    TAIL_TOL,
    localization_profile,
    localization_verdict,
    weight_grid_size,
    weighted_constant_scan,
)

logger = logging.getLogger(__name__)

RANK_TOL = 1e-8
RANK_TOLERANCES = (1e-6, 1e-8, 1e-10)
FORMULA_FRACTION = 0.999
# eigenvalues below this multiple of the global maximum count as exact zeros
RANK_FLOOR = 1e-14
OUTLIER_FRACTION = 1e-3
DOMINATION_SLACK = 1e-9
EIGBOUND_SLACK = 1e-9
GRAMIAN_ZERO_TOL = 1e-12


class Generator(BaseModel):
    """One generator through its Fourier transform ĥ on ℝ^d.

    ``time_axis`` is a one-dimensional function whose d-fold product has the modulus
    of the generator h itself; localization integrals use it.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: str
    d: int = Field(ge=1, le=2)
    spectrum: Callable[..., np.ndarray]
    kmax: int = Field(ge=0)
    time_axis: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, *xis: np.ndarray) -> np.ndarray:
        shape = np.broadcast_shapes(*(np.shape(xi) for xi in xis))
        return np.broadcast_to(np.asarray(self.spectrum(*xis), dtype=complex), shape)


class GeneratorSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    generators: tuple[Generator, ...] = Field(min_length=1, max_length=8)

    @model_validator(mode="after")
    def _same_dimension(self) -> "GeneratorSet":
        if len({g.d for g in self.generators}) != 1:
            raise ValueError("generators must share the dimension d")
        return self

    @property
    def K(self) -> int:
        return len(self.generators)

    @property
    def d(self) -> int:
        return self.generators[0].d

    @property
    def kmax(self) -> int:
        return max(g.kmax for g in self.generators)

    def evaluate(self, *xis: np.ndarray) -> np.ndarray:
        """Ĥ at the given coordinates, with the generator index last."""
        return np.stack([g(*xis) for g in self.generators], axis=-1)

    def shifts(self) -> np.ndarray:
        """Integer shifts ℓ with |ℓ|_∞ <= kmax, shape (count, d)."""
        span = np.arange(-self.kmax, self.kmax + 1)
        grids = np.meshgrid(*([span] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def check_decay(self, samples_per_unit: int = 64) -> None:
        """Raises DecayCertificateError if some |ĥ_k| reaches 1e-12 just past its kmax."""
        for g in self.generators:
            inner = g.kmax + 0.5
            ring = inner + (np.arange(samples_per_unit) + 0.5) / samples_per_unit
            line = np.concatenate([-ring[::-1], ring])
            if g.d == 1:
                tail = np.abs(g(line))
            else:
                axis = np.linspace(-inner - 1, inner + 1, 2 * (g.kmax + 2) * samples_per_unit)
                X, Y = np.meshgrid(axis, axis, indexing="ij")
                outside = np.maximum(np.abs(X), np.abs(Y)) > inner
                tail = np.abs(g(X[outside], Y[outside]))
            peak = float(np.max(tail, initial=0.0))
            if peak > TAIL_TOL:
                raise DecayCertificateError(
                    f"generator '{g.label}': |ĥ| = {peak:.3g} past kmax={g.kmax}; increase kmax"
                )


def _product(func: Callable[[np.ndarray], np.ndarray]) -> Callable[..., np.ndarray]:
    return lambda *xis: np.prod([func(np.asarray(xi, dtype=float)) for xi in xis], axis=0)


def box_generator(lo: float = -0.5, hi: float = 0.5, d: int = 1) -> Generator:
    """ĥ = χ_[lo, hi) on each axis; h is a modulated sinc."""
    if not -0.5 <= lo < hi <= 0.5:
        raise DomainError(f"box generator needs -1/2 <= lo < hi <= 1/2, got [{lo}, {hi})")
    width, middle = hi - lo, (hi + lo) / 2
    return Generator(
        label=f"box[{lo:g},{hi:g})",
        d=d,
        spectrum=_product(lambda xi: ((xi >= lo) & (xi < hi)).astype(float)),
        kmax=0,
        time_axis=lambda x: width * np.sinc(width * x) * np.exp(2j * np.pi * middle * x),
    )


def gaussian_generator(width: float = 1.0, d: int = 1, kmax: int | None = None) -> Generator:
    """ĥ(ξ) = e^{-π|ξ|²/width²}, h(x) = width^d e^{-π width² |x|²}."""
    if not width > 0:
        raise DomainError(f"width must be positive, got {width}")
    if kmax is None:
        # e^{-π(k + 1/2)²/width²} < 1e-13
        kmax = math.ceil(width * np.sqrt(13 * np.log(10) / np.pi) - 0.5)
    return Generator(
        label=f"gaussian{width:g}",
        d=d,
        spectrum=_product(lambda xi: np.exp(-np.pi * xi**2 / width**2)),
        kmax=kmax,
        time_axis=lambda x: width * np.exp(-np.pi * width**2 * x**2),
    )


def h_beta_generator(beta: float) -> Generator:
    """ĥ = h_β, supported in [-1/2, 1/2]; the time side is the transform of h_β."""
    window = HBetaWindow(beta=beta)
    return Generator(
        label=f"h_beta{beta:g}", d=1, spectrum=window, kmax=0, time_axis=window.transform
    )


def tensor_h_beta_generator(beta: float, d: int = 2) -> Generator:
    F = TensorFBeta(beta=beta, d=d)
    return Generator(
        label=f"F_beta{beta:g}_d{d}", d=d, spectrum=F, kmax=0, time_axis=F.factor.transform
    )


def scaled_generator(generator: Generator, factor: complex) -> Generator:
    root = abs(factor) ** (1 / generator.d)
    time_axis = generator.time_axis
    return Generator(
        label=f"{factor:g}*{generator.label}",
        d=generator.d,
        spectrum=lambda *xis: factor * generator(*xis),
        kmax=generator.kmax,
        time_axis=(lambda x: root * time_axis(x)) if time_axis is not None else None,
    )


def zero_generator(d: int = 1) -> Generator:
    return Generator(
        label="zero",
        d=d,
        spectrum=lambda *xis: np.zeros(np.broadcast_shapes(*(np.shape(x) for x in xis))),
        kmax=0,
        time_axis=np.zeros_like,
    )


# ---------------------------------------------------------------------------
# lattices
# ---------------------------------------------------------------------------


class LatticeSpec(BaseModel):
    """Γ = B ℤ^d with ℤ^d ⊊ Γ; the dual Γ* = B^{-T} ℤ^d is a sublattice of ℤ^d."""

    model_config = ConfigDict(frozen=True)

    label: str
    basis: tuple[tuple[float, ...], ...]

    @model_validator(mode="after")
    def _contains_integers(self) -> "LatticeSpec":
        B = self.matrix
        if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] not in (1, 2):
            raise ValueError("basis must be a 1x1 or 2x2 matrix")
        det = float(np.linalg.det(B))
        if abs(det) < 1e-12:
            raise ValueError("basis is singular")
        inverse = np.linalg.inv(B)
        if np.max(np.abs(inverse - np.round(inverse))) > 1e-9:
            raise ValueError("Γ must contain ℤ^d: the inverse basis is not an integer matrix")
        if round(1 / abs(det)) < 2:
            raise ValueError("Γ must strictly contain ℤ^d")
        return self

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.basis, dtype=float)

    @property
    def d(self) -> int:
        return len(self.basis)

    @property
    def index(self) -> int:
        """[Γ : ℤ^d] = 1/|det B|."""
        return int(round(1 / abs(np.linalg.det(self.matrix))))

    @property
    def dual_matrix(self) -> np.ndarray:
        return np.round(np.linalg.inv(self.matrix).T).astype(int)

    def class_keys(self, points: np.ndarray) -> list[tuple[int, ...]]:
        """Coset of each integer point modulo Γ*, as B^T ℓ mod 1 in units of 1/index."""
        coords = np.atleast_2d(points) @ self.matrix
        scaled = np.round(np.mod(coords, 1.0) * self.index).astype(int) % self.index
        return [tuple(int(v) for v in row) for row in scaled]

    def representatives(self) -> list[tuple[int, ...]]:
        """One integer point per coset of ℤ^d / Γ*."""
        reps: dict[tuple[int, ...], tuple[int, ...]] = {}
        candidates = np.stack(
            [g.ravel() for g in np.meshgrid(*([np.arange(self.index)] * self.d), indexing="ij")],
            axis=-1,
        )
        for point, key in zip(candidates, self.class_keys(candidates)):
            reps.setdefault(key, tuple(int(v) for v in point))
        return list(reps.values())

    @classmethod
    def refinement(cls, m: int) -> "LatticeSpec":
        """Γ = (1/m)ℤ."""
        if m < 2:
            raise LatticeError(f"refinement factor must be >= 2, got {m}")
        return cls(label=f"(1/{m})Z", basis=((1 / m,),))

    @classmethod
    def diagonal(cls, m1: int, m2: int) -> "LatticeSpec":
        """Γ = (1/m1)ℤ × (1/m2)ℤ."""
        if min(m1, m2) < 1 or m1 * m2 < 2:
            raise LatticeError(
                f"diagonal refinement needs m1, m2 >= 1 with m1*m2 >= 2, got {m1}, {m2}"
            )
        return cls(label=f"(1/{m1})Zx(1/{m2})Z", basis=((1 / m1, 0.0), (0.0, 1 / m2)))

    @classmethod
    def quincunx(cls) -> "LatticeSpec":
        """Γ = ℤ² + ℤ(1/2, 1/2), index 2; Γ* = {k : k_1 + k_2 even}."""
        return cls(label="quincunx", basis=((1.0, 0.5), (0.0, 0.5)))


# ---------------------------------------------------------------------------
# Gramians
# ---------------------------------------------------------------------------


def _outer_sum(H: GeneratorSet, grid: TorusGrid, shifts: np.ndarray) -> np.ndarray:
    coords = grid.coordinates()
    total = np.zeros((*grid.shape, H.K, H.K), dtype=complex)
    for shift in shifts:
        values = H.evaluate(*(c + s for c, s in zip(coords, shift)))
        total += np.einsum("...i,...j->...ij", values, values.conj())
    return total


def gramian(H: GeneratorSet, grid: TorusGrid, check_tail: bool = True) -> HermitianField:
    """P(x) = Σ_{|ℓ|_∞<=kmax} Ĥ(x+ℓ)Ĥ(x+ℓ)* on the cell [-1/2, 1/2)^d.

    Raises:
        DecayCertificateError: If a generator is not below the tail tolerance past kmax.
        DomainError: If the grid dimension differs from the generators'.
    """
    if grid.d != H.d:
        raise DomainError(f"grid d={grid.d} does not match generator d={H.d}")
    if check_tail:
        H.check_decay()
    return HermitianField(K=H.K, grid=grid, entries=_outer_sum(H, grid, H.shifts()))


def sub_gramians(
    H: GeneratorSet, lattice: LatticeSpec, grid: TorusGrid
) -> dict[tuple[int, ...], HermitianField]:
    """P_{Γ*}(x + k) for every representative k, keyed by k.

    Each shift ℓ = k + γ goes to exactly one coset, so the fields sum to the Gramian.
    """
    if lattice.d != H.d or grid.d != H.d:
        raise LatticeError(f"lattice d={lattice.d}, grid d={grid.d}, generators d={H.d}")
    H.check_decay()
    shifts = H.shifts()
    keys = lattice.class_keys(shifts)
    reps = lattice.representatives()
    parts = {}
    for rep, rep_key in zip(reps, lattice.class_keys(np.asarray(reps))):
        members = [s for s, key in zip(shifts, keys) if key == rep_key]
        parts[rep] = HermitianField(K=H.K, grid=grid, entries=_outer_sum(H, grid, members))
    return parts


def decomposition_residual(P: HermitianField, parts: dict[Any, HermitianField]) -> float:
    """max |P - Σ_k P_{Γ*}(· + k)|."""
    total = sum(part.entries for part in parts.values())
    return float(np.max(np.abs(P.entries - total)))


def _spectrum(P: HermitianField) -> np.ndarray:
    """Pointwise eigenvalues in ascending order."""
    return np.linalg.eigvalsh(P.entries)


def _global_floor(P: HermitianField) -> float:
    return RANK_FLOOR * max(float(np.max(_spectrum(P), initial=0.0)), 0.0)


def numerical_rank(
    eigenvalues: np.ndarray, rho: float = RANK_TOL, floor: float = 0.0
) -> np.ndarray:
    """#{λ > ρ λ_max(x)} per sample; samples with λ_max <= ``floor`` have rank 0."""
    top = eigenvalues[..., -1:]
    ranks = np.sum(eigenvalues > rho * top, axis=-1)
    return np.where(top[..., 0] > floor, ranks, 0)


def is_nontrivial_invariance(index: int, J: int) -> bool:
    """Extra invariance by a lattice of index m is non-trivial when m does not divide J."""
    return J % index != 0


def minimal_generator_count(
    P: HermitianField, rho: float = RANK_TOL, outlier_fraction: float = OUTLIER_FRACTION
) -> MinimalGeneratorCount:
    """J = ess sup of rank P(x), realized as the largest sampled rank.

    The largest rank is discarded as an outlier when it occurs on at most
    ``outlier_fraction`` of the samples, each without a neighbour of the same rank.
    """
    ranks = numerical_rank(_spectrum(P), rho, _global_floor(P))
    values, counts = np.unique(ranks, return_counts=True)
    histogram = {int(v): int(c) for v, c in zip(values, counts)}
    J = int(values[-1])
    guard = False
    if len(values) > 1 and counts[-1] <= outlier_fraction * ranks.size:
        top = ranks == J
        neighbours = np.zeros_like(top)
        for axis in range(ranks.ndim):
            neighbours |= np.roll(top, 1, axis=axis) | np.roll(top, -1, axis=axis)
        if not np.any(top & neighbours):
            guard = True
            logger.warning("rank %d on %d isolated samples treated as outliers", J, counts[-1])
            J = int(values[-2])
    return MinimalGeneratorCount(J=J, rank_histogram=histogram, outlier_guard_applied=guard)


def rank_formula_check(
    H: GeneratorSet,
    lattice: LatticeSpec,
    grid: TorusGrid,
    rhos: Sequence[float] = RANK_TOLERANCES,
) -> RankFormulaReport:
    """Test rank P(x) = Σ_{k∈R} rank P_{Γ*}(x + k), the criterion for Γ-invariance.

    The verdict is emitted only when every rank tolerance agrees; otherwise it is
    "undetermined".
    """
    P = gramian(H, grid)
    parts = sub_gramians(H, lattice, grid)
    floor = _global_floor(P)
    if floor == 0.0:
        return RankFormulaReport(
            passed=True,
            findings=[
                CheckFinding(
                    code="degenerate_gramian",
                    severity=FindingSeverity.WARNING,
                    message="P vanishes identically; the rank formula holds trivially",
                )
            ],
            index=lattice.index,
            fractions={f"{rho:g}": 1.0 for rho in rhos},
            verdict="gamma_invariant",
            degenerate=True,
        )

    spectrum = _spectrum(P)
    part_spectra = [_spectrum(part) for part in parts.values()]
    fractions = {}
    for rho in rhos:
        whole = numerical_rank(spectrum, rho, floor)
        summed = sum(numerical_rank(s, rho, floor) for s in part_spectra)
        fractions[f"{rho:g}"] = float(np.mean(whole == summed))

    holds = [f > FORMULA_FRACTION for f in fractions.values()]
    if all(holds):
        verdict = "gamma_invariant"
    elif not any(holds):
        verdict = "not_invariant"
    else:
        verdict = "undetermined"
        logger.warning("rank formula verdict depends on the rank tolerance: %s", fractions)

    J = minimal_generator_count(P).J
    nontrivial = verdict == "gamma_invariant" and is_nontrivial_invariance(lattice.index, J)
    findings = []
    if verdict == "undetermined":
        findings.append(
            CheckFinding(
                code="rank_tolerance_disagreement",
                severity=FindingSeverity.WARNING,
                message="rank tolerances disagree on the rank formula",
                data={k: v for k, v in fractions.items()},
            )
        )
    return RankFormulaReport(
        passed=verdict != "undetermined",
        findings=findings,
        index=lattice.index,
        fractions=fractions,
        verdict=verdict,
        J=J,
        nontrivial=nontrivial,
    )


def _smallest_positive(eigenvalues: np.ndarray, rho: float, floor: float) -> np.ndarray:
    top = eigenvalues[..., -1:]
    positive = (eigenvalues > rho * top) & (top > floor)
    return np.min(np.where(positive, eigenvalues, np.inf), axis=-1)


def ev_domination(
    B: np.ndarray, parts: Sequence[np.ndarray], rho: float = RANK_TOL
) -> tuple[bool, float, float]:
    """For B = Σ A_k with additive ranks, μ(B) <= min_k η(A_k).

    μ and η are smallest positive eigenvalues; parts of rank 0 are ignored.

    Returns:
        (qualifies, μ, min η); μ and η are ∞ when there is nothing positive.
    """
    spectrum = np.linalg.eigvalsh(B)
    floor = RANK_FLOOR * max(float(spectrum[-1]), 0.0)
    part_spectra = [np.linalg.eigvalsh(A) for A in parts]
    rank = int(numerical_rank(spectrum, rho, floor))
    qualifies = rank > 0 and rank == sum(int(numerical_rank(s, rho, floor)) for s in part_spectra)
    mu = float(_smallest_positive(spectrum, rho, floor))
    eta = min((float(_smallest_positive(s, rho, floor)) for s in part_spectra), default=np.inf)
    return qualifies, mu, eta


def ev_domination_check(
    P: HermitianField,
    parts: Sequence[HermitianField],
    rho: float = RANK_TOL,
    slack: float = DOMINATION_SLACK,
) -> EVDominationReport:
    """Check μ(P(x)) <= min_k η(P_{Γ*}(x + k)) wherever the rank formula holds at x."""
    floor = _global_floor(P)
    spectrum = _spectrum(P)
    part_spectra = [_spectrum(part) for part in parts]
    rank = numerical_rank(spectrum, rho, floor)
    summed = sum(numerical_rank(s, rho, floor) for s in part_spectra)
    qualifies = (rank == summed) & (rank > 0)

    mu = _smallest_positive(spectrum, rho, floor)
    eta = np.min([_smallest_positive(s, rho, floor) for s in part_spectra], axis=0)
    excess = (mu - eta)[qualifies]
    max_excess = float(np.max(excess)) if excess.size else 0.0
    scale = max(1.0, float(np.max(spectrum, initial=0.0)))
    passed = max_excess <= slack * scale
    findings = []
    if not passed:
        findings.append(
            CheckFinding(
                code="ev_domination_violated",
                severity=FindingSeverity.ERROR,
                message=f"smallest positive eigenvalue exceeds the parts' by {max_excess:.3g}",
                data={"max_excess": max_excess},
            )
        )
    skipped = int(rank.size - np.count_nonzero(qualifies))
    logger.debug("ev domination: %d checked, %d skipped", int(np.count_nonzero(qualifies)), skipped)
    return EVDominationReport(
        passed=passed,
        findings=findings,
        checked=int(np.count_nonzero(qualifies)),
        skipped=skipped,
        max_excess=max_excess,
    )


# ---------------------------------------------------------------------------
# eigenvalue regularity and zero sets
# ---------------------------------------------------------------------------


def _fiber(H: GeneratorSet, points: np.ndarray) -> np.ndarray:
    """Ĥ(x + ℓ) for every point and shift, shape (points, shifts, K)."""
    shifts = H.shifts()
    moved = points[:, None, :] + shifts[None, :, :]
    return H.evaluate(*(moved[..., axis] for axis in range(H.d)))


def _sqrt_eigenvalues(fiber: np.ndarray) -> np.ndarray:
    """√ζ_1 >= ... >= √ζ_K, the singular values of each fiber matrix."""
    values = np.linalg.svd(fiber, compute_uv=False)
    K = fiber.shape[-1]
    if values.shape[-1] < K:
        # fewer shifts than generators: the remaining ζ_k vanish
        values = np.pad(values, ((0, 0), (0, K - values.shape[-1])))
    return values


def sqrt_eigen_tracks(H: GeneratorSet, grid: TorusGrid) -> list[SampleField]:
    """√ζ_k(x) on the grid, k = 1..K in decreasing order."""
    P = gramian(H, grid)
    roots = np.sqrt(np.clip(_spectrum(P)[..., ::-1], 0.0, None))
    return [SampleField(grid=grid, values=roots[..., k]) for k in range(H.K)]


def sqrt_eigen_regularity_check(
    H: GeneratorSet,
    s: float,
    ns: list[int],
    pairs: int = 10_000,
    seed: int = DEFAULT_SEED,
    expected_member: bool | None = None,
    slack: float = EIGBOUND_SLACK,
    thresholds: FitThresholds = FIT_THRESHOLDS,
) -> SqrtEigenReport:
    """Lipschitz bound and Ẇ^{s,2} membership of the square-root eigenvalues of P.

    The bound |√ζ_k(x) - √ζ_k(y)| <= (Σ_j Σ_ℓ |ĥ_j(x+ℓ) - ĥ_j(y+ℓ)|²)^{1/2}
    is checked at ``pairs`` random point pairs. Membership of each √ζ_k follows the refinement
    of its Ẇ^{s,2} seminorm (the L² norm of the derivative when s = 1).
    """
    if not 0 < s <= 1:
        raise DomainError(f"s must lie in (0, 1], got {s}")
    H.check_decay()
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.5, 0.5, size=(pairs, H.d))
    y = rng.uniform(-0.5, 0.5, size=(pairs, H.d))
    fiber_x, fiber_y = _fiber(H, x), _fiber(H, y)
    lhs = np.max(np.abs(_sqrt_eigenvalues(fiber_x) - _sqrt_eigenvalues(fiber_y)), axis=-1)
    rhs = np.sqrt(np.sum(np.abs(fiber_x - fiber_y) ** 2, axis=(1, 2)))
    max_excess = float(np.max(lhs - rhs))

    def seminorm_squared(f: SampleField) -> float:
        if s == 1:
            return higher_slobodeckij_seminorm(f, 1.0, 2.0) ** 2
        return slobodeckij_seminorm(f, s, 2.0) ** 2

    per_grid = [
        [seminorm_squared(f) for f in sqrt_eigen_tracks(H, TorusGrid(d=H.d, n=n))]
        for n in ns
    ]
    series, memberships = [], []
    for k in range(H.K):
        track = ScanSeries(
            name=f"sqrt_zeta{k + 1}_s{s:g}",
            parameters=[float(n) for n in ns],
            values=[row[k] for row in per_grid],
            parameter_label="n",
            value_label="seminorm_squared",
            metadata={"s": s},
        )
        series.append(track)
        memberships.append(classify_partial_sums(track, thresholds=thresholds))

    findings = []
    if max_excess > slack:
        findings.append(
            CheckFinding(
                code="eigbound_violated",
                severity=FindingSeverity.ERROR,
                message=f"square-root eigenvalue bound exceeded by {max_excess:.3g}",
                data={"max_excess": max_excess},
            )
        )
    if expected_member is not None:
        for k, assessment in enumerate(memberships):
            member = assessment.verdict == DivergenceVerdict.CONVERGENT
            if member != expected_member:
                findings.append(
                    CheckFinding(
                        code="membership_mismatch",
                        severity=FindingSeverity.ERROR,
                        message=f"sqrt zeta_{k + 1}: expected member={expected_member}, "
                        f"refinement says {assessment.verdict.value}",
                    )
                )
    return SqrtEigenReport(
        passed=not findings,
        findings=findings,
        s=s,
        pair_count=pairs,
        max_bound_excess=max_excess,
        memberships=memberships,
        series=series,
    )


def zeta_zero_set(P: HermitianField, rho: float = RANK_TOL) -> ZetaZeroSetReport:
    """Where the smallest eigenvalue ζ_K of P vanishes.

    With J = K generators, extra invariance forces ζ_J to vanish on a set of positive
    measure, or in d = 1 at the boundary point of the cell.
    """
    spectrum = _spectrum(P)
    scale = max(float(np.max(spectrum, initial=0.0)), 0.0)
    zero = spectrum[..., 0] <= rho * scale
    fraction = float(np.mean(zero))
    boundary = bool(P.grid.d == 1 and zero[0])
    J = minimal_generator_count(P, rho).J
    findings = []
    if J == P.K and fraction == 0.0 and not boundary:
        findings.append(
            CheckFinding(
                code="zeta_nonvanishing",
                severity=FindingSeverity.INFO,
                message="ζ_J has no numerical zeros; no extra invariance with J = K",
                data={"J": J},
            )
        )
    return ZetaZeroSetReport(
        passed=True, findings=findings, J=J, zero_fraction=fraction, boundary_zero=boundary
    )


# ---------------------------------------------------------------------------
# (C_q) for systems of translates
# ---------------------------------------------------------------------------


def _zero_fraction(P: HermitianField) -> float:
    spectrum = _spectrum(P)
    scale = max(float(np.max(spectrum, initial=0.0)), 0.0)
    return float(np.mean(spectrum[..., 0] <= GRAMIAN_ZERO_TOL * scale))


def check_gramian_nondegenerate(H: GeneratorSet, n: int) -> HermitianField:
    """Gramian on the n-grid, after checking that its zero set shrinks under refinement.

    Raises:
        DegenerateGramianError: If the fraction of singular samples does not drop
            when the grid is refined (P is not positive definite almost everywhere).
    """
    P = gramian(H, TorusGrid(d=H.d, n=n))
    coarse = _zero_fraction(P)
    if coarse > 0:
        fine = _zero_fraction(gramian(H, TorusGrid(d=H.d, n=2 * n), check_tail=False))
        if fine > 0.75 * coarse:
            raise DegenerateGramianError(
                f"P is singular on {fine:.1%} of the cell at n={2 * n} ({coarse:.1%} at n={n})"
            )
    return P


def _weakest_point(P: HermitianField) -> tuple[float, ...]:
    """Sample where the smallest eigenvalue of P is least."""
    index = np.unravel_index(int(np.argmin(_spectrum(P)[..., 0])), P.grid.shape)
    return tuple(float(P.grid.axis()[i]) for i in index)


def sis_cq_diagnostic(
    H: GeneratorSet,
    q: float,
    Ns: list[int],
    n: int | None = None,
    config: AscentConfig = DEFAULT_ASCENT,
    tolerance: float = CQ_STABILITY_TOL,
    ts: Sequence[float] = (),
    radii: Sequence[float] = DEFAULT_RADII,
    lattice: LatticeSpec | None = None,
) -> SISCqReport:
    """Matrix weighted inequality D‖a‖_{[ℓ^q]^K} <= ‖Σ_k a_k e_k‖_{L²_P} across boxes.

    The translates form an exact (C_q)-system iff the constant stays positive. For
    each t in ``ts`` the time localization Σ_k ∫|x|^t |h_k|² is classified, and a
    lattice, when given, adds the extra-invariance rank test.

    Raises:
        DegenerateGramianError: If P is singular on a set of positive measure.
    """
    n = n or weight_grid_size(max(Ns), minimum=64)
    P = check_gramian_nondegenerate(H, n)
    center = _weakest_point(P)
    estimates = []
    for N in sorted(Ns):
        box = FreqBox(d=H.d, N=N)
        estimate = weighted_lower_constant(
            block_gram(P, box), q, N, config, block_witnesses(H.K, box, center)
        )
        estimates.append(estimate)
        logger.debug("sis q=%g N=%d: D=%.6g", q, N, estimate.value)
    labels = "+".join(g.label for g in H.generators)
    scan = weighted_constant_scan(estimates, q, f"sis_D_{labels}_q{q:g}", tolerance)

    localization: list[LocalizationVerdict] = []
    if ts and all(g.time_axis is not None for g in H.generators):
        for t in ts:
            profile = _summed_profile(H, t, radii)
            localization.append(localization_verdict(profile, "time", t))

    rank_formula = rank_formula_check(H, lattice, P.grid) if lattice is not None else None
    return SISCqReport(
        passed=scan.stable,
        findings=list(scan.findings),
        q=q,
        scan=scan,
        holds=scan.stable,
        localization=localization,
        rank_formula=rank_formula,
    )


def _summed_profile(H: GeneratorSet, t: float, radii: Sequence[float]) -> ScanSeries:
    """Σ_k of the per-generator profiles; each h_k is a product over axes."""
    profiles = [
        localization_profile(g.time_axis, t, radii, d=H.d, name=g.label) for g in H.generators
    ]
    return ScanSeries(
        name=f"sis_{'+'.join(g.label for g in H.generators)}_t{t:g}",
        parameters=list(profiles[0].parameters),
        values=[float(sum(v)) for v in zip(*(p.values for p in profiles))],
        parameter_label="R",
        value_label="integral",
        metadata={"t": t},
    )
