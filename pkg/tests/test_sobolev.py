"""Tests for spectral and difference smoothness functionals."""

from functools import partial

import numpy as np
import pytest
from pydantic import ValidationError

from multiplier_lab.analysis.constructions import h_beta, w_beta_profile
from multiplier_lab.analysis.exceptions import EmptyWindowError
from multiplier_lab.analysis.sobolev import (
    AnisoParams,
    SobolevParams,
    aniso_seminorm,
    ball_lr_norm,
    ball_slobodeckij_seminorm,
    displacement_norms,
    embedding_implies,
    higher_slobodeckij_seminorm,
    holder_quotient,
    holder_scan,
    hs_partial_sums,
    hs_seminorm,
    is_modulus_monotone,
    line_restriction_seminorm,
    line_restriction_terms,
    membership_report,
    mixed_holder_profile,
    relative_modulus,
    slobodeckij_fourier_constant,
    slobodeckij_refinement_scan,
    slobodeckij_seminorm,
)
from multiplier_lab.core.exceptions import DomainError
from multiplier_lab.core.fit import classify_partial_sums, loglog_fit
from multiplier_lab.core.grid import sample_function, synthesize
from multiplier_lab.models.field_models import (
    Ball,
    CoeffField,
    FreqBox,
    SampleField,
    ScaleWindow,
    TorusGrid,
)
from multiplier_lab.models.scan_models import DivergenceVerdict
from tests.helpers import dyadic, random_coeffs


def _radial_w(beta, *coords):
    return w_beta_profile(beta, np.sqrt(sum(c**2 for c in coords)))


def _brute_slobodeckij(f: SampleField, s: float, r: float) -> float:
    """Direct double sum over all shifts, the definition the FFT route must match."""
    grid = f.grid
    norms = displacement_norms(grid)
    total = 0.0
    for m in np.ndindex(grid.shape):
        if norms[m] == 0:
            continue
        shifted = np.roll(f.values, tuple(-k for k in m), axis=tuple(range(grid.d)))
        total += np.sum(np.abs(shifted - f.values) ** r) / norms[m] ** (grid.d + s * r)
    return float((total / grid.size**2) ** (1 / r))


# ---------------------------------------------------------------------------
# TestParams
# ---------------------------------------------------------------------------
class TestParams:
    def test_alpha(self):
        assert SobolevParams(s=1.0, r=2.0).alpha(1) == pytest.approx(0.5)

    def test_r_must_exceed_one(self):
        with pytest.raises(ValidationError):
            SobolevParams(s=0.5, r=1.0)

    def test_aniso_indices(self):
        p = AnisoParams(s_vec=(2.0, 2.0))
        assert p.ell == pytest.approx(1.0)
        assert p.alphas == pytest.approx((1.0, 1.0))

    def test_aniso_rejects_zero_order(self):
        with pytest.raises(ValidationError):
            AnisoParams(s_vec=(1.0, 0.0))

    def test_embedding(self):
        source = SobolevParams(s=1.0, r=2.0)
        target = SobolevParams(s=0.5, r=4.0)
        assert embedding_implies(source, target, d=1)
        assert not embedding_implies(target, source, d=1)


# ---------------------------------------------------------------------------
# TestSpectral
# ---------------------------------------------------------------------------
class TestSpectral:
    def test_constant_has_zero_seminorm(self):
        c = CoeffField(box=FreqBox(d=1, N=2), coeffs=[0, 0, 1, 0, 0])
        assert hs_seminorm(c, 0.7) == 0.0

    def test_single_mode(self):
        coeffs = np.zeros(7)
        coeffs[3 + 3] = 1.0
        c = CoeffField(box=FreqBox(d=1, N=3), coeffs=coeffs)
        assert hs_seminorm(c, 0.5) == pytest.approx(np.sqrt(3))

    def test_nonpositive_order(self):
        c = CoeffField(box=FreqBox(d=1, N=1), coeffs=[1, 1, 1])
        with pytest.raises(DomainError):
            hs_seminorm(c, 0.0)

    def test_aniso_single_mode(self):
        box = FreqBox(d=2, N=3)
        coeffs = np.zeros(box.shape)
        coeffs[3 + 2, 3 + 3] = 1.0
        c = CoeffField(box=box, coeffs=coeffs)
        assert aniso_seminorm(c, AnisoParams(s_vec=(1.0, 0.5))) == pytest.approx(np.sqrt(7))

    def test_aniso_equivalent_to_isotropic(self):
        c = random_coeffs(FreqBox(d=2, N=6))
        iso = hs_seminorm(c, 0.8) ** 2
        aniso = aniso_seminorm(c, AnisoParams(s_vec=(0.8, 0.8))) ** 2
        assert iso <= aniso * (1 + 1e-12)
        assert aniso <= 2 * iso * (1 + 1e-12)

    def test_aniso_dimension_mismatch(self):
        c = random_coeffs(FreqBox(d=1, N=4))
        with pytest.raises(DomainError):
            aniso_seminorm(c, AnisoParams(s_vec=(0.5, 0.5)))

    def test_partial_sums_grow(self):
        c = random_coeffs(FreqBox(d=1, N=32))
        series = hs_partial_sums(c, 0.5, [2, 4, 8, 16, 32])
        assert series.values == sorted(series.values)
        assert series.values[-1] == pytest.approx(hs_seminorm(c, 0.5) ** 2)

    @pytest.mark.parametrize(("s", "member"), [(0.6, True), (0.7, False)])
    def test_h_beta_membership_threshold(self, s, member):
        # finite exactly for s < (1 + β)/2 = 0.65
        c = h_beta(0.3).periodized_coeffs(FreqBox(d=1, N=2048))
        series = hs_partial_sums(c, s, [128, 256, 512, 1024, 2048])
        verdict = classify_partial_sums(series).verdict
        assert (verdict == DivergenceVerdict.CONVERGENT) is member

    def test_fourier_constant(self):
        assert slobodeckij_fourier_constant(0.5) == pytest.approx(4 * np.pi**2)
        with pytest.raises(DomainError):
            slobodeckij_fourier_constant(1.0)


# ---------------------------------------------------------------------------
# TestSlobodeckij
# ---------------------------------------------------------------------------
class TestSlobodeckij:
    def test_constant_is_zero(self, constant_1d):
        assert slobodeckij_seminorm(constant_1d, 0.5) == pytest.approx(0.0, abs=1e-4)
        assert slobodeckij_seminorm(constant_1d, 0.5, r=3.0) == 0.0

    @pytest.mark.parametrize("r", [2.0, 3.0])
    def test_matches_direct_sum_1d(self, rng, r):
        f = SampleField(grid=TorusGrid(d=1, n=16), values=rng.standard_normal(16))
        assert slobodeckij_seminorm(f, 0.4, r) == pytest.approx(
            _brute_slobodeckij(f, 0.4, r), rel=1e-10
        )

    def test_matches_direct_sum_2d(self, rng):
        f = SampleField(grid=TorusGrid(d=2, n=8), values=rng.standard_normal((8, 8)))
        assert slobodeckij_seminorm(f, 0.6) == pytest.approx(
            _brute_slobodeckij(f, 0.6, 2.0), rel=1e-10
        )

    def test_workers_do_not_change_value(self, rng):
        f = SampleField(grid=TorusGrid(d=1, n=32), values=rng.standard_normal(32))
        assert slobodeckij_seminorm(f, 0.3, 1.5, workers=3) == pytest.approx(
            slobodeckij_seminorm(f, 0.3, 1.5, workers=1), rel=1e-12
        )

    @pytest.mark.parametrize(("s", "r"), [(1.0, 2.0), (0.0, 2.0), (0.5, 0.5), (0.5, np.inf)])
    def test_domain(self, constant_1d, s, r):
        with pytest.raises(DomainError):
            slobodeckij_seminorm(constant_1d, s, r)

    def test_equivalent_to_fourier_side(self):
        grid = TorusGrid(d=1, n=256)
        s = 0.5
        for seed in range(5):
            c = random_coeffs(FreqBox(d=1, N=8), seed=seed)
            f = synthesize(c, grid)
            ratio = slobodeckij_seminorm(f, s) ** 2 / (
                slobodeckij_fourier_constant(s) * hs_seminorm(c, s) ** 2
            )
            assert 0.5 < ratio < 2.0

    @pytest.mark.parametrize(("s", "member"), [(0.7, True), (0.9, False)])
    def test_w_beta_membership_threshold(self, s, member):
        # w_0.3 ∈ Ẇ^{s,2} iff s - 1/2 < 0.3
        scan = slobodeckij_refinement_scan(
            partial(_radial_w, 0.3), 1, s, 2.0, [256, 512, 1024, 2048, 4096]
        )
        report = membership_report(scan, f"W^{{{s},2}}", expected_member=member)
        assert report.passed
        assert (report.assessment.verdict == DivergenceVerdict.CONVERGENT) is member

    def test_membership_mismatch_is_an_error(self):
        scan = slobodeckij_refinement_scan(
            partial(_radial_w, 0.3), 1, 0.9, 2.0, [256, 512, 1024, 2048, 4096]
        )
        report = membership_report(scan, "W^{0.9,2}", expected_member=True)
        assert not report.passed
        assert report.findings[0].code == "membership_mismatch"


# ---------------------------------------------------------------------------
# TestLineRestriction
# ---------------------------------------------------------------------------
class TestLineRestriction:
    def test_one_dimension_degenerates(self, grid_1d):
        f = sample_function(lambda x: np.sin(2 * np.pi * x) ** 3, grid_1d)
        assert line_restriction_seminorm(f, 0.4, 3.0) == pytest.approx(
            slobodeckij_seminorm(f, 0.4, 3.0) ** 3, rel=1e-12
        )

    def test_constant_is_zero(self, grid_2d):
        f = SampleField(grid=grid_2d, values=np.ones(grid_2d.shape))
        assert line_restriction_seminorm(f, 0.5) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("r", [2.0, 3.0])
    def test_separable_only_x_direction(self, grid_2d, r):
        f = sample_function(lambda x, y: np.cos(2 * np.pi * x) + 0 * y, grid_2d)
        g = sample_function(lambda x: np.cos(2 * np.pi * x), TorusGrid(d=1, n=64))
        x_term, y_term = line_restriction_terms(f, 0.5, r)
        assert y_term == pytest.approx(0.0, abs=1e-9)
        assert x_term == pytest.approx(slobodeckij_seminorm(g, 0.5, r) ** r, rel=1e-10)

    def test_comparable_to_full_seminorm(self):
        grid = TorusGrid(d=2, n=32)
        ratios = []
        for seed in range(5):
            f = synthesize(random_coeffs(FreqBox(d=2, N=8), seed=seed), grid)
            ratios.append(line_restriction_seminorm(f, 0.5) / slobodeckij_seminorm(f, 0.5) ** 2)
        assert max(ratios) / min(ratios) < 4.0


# ---------------------------------------------------------------------------
# TestHigherOrder
# ---------------------------------------------------------------------------
class TestHigherOrder:
    def test_fractional_order_delegates(self, grid_1d):
        f = sample_function(lambda x: np.sin(2 * np.pi * x), grid_1d)
        assert higher_slobodeckij_seminorm(f, 0.4) == pytest.approx(
            slobodeckij_seminorm(f, 0.4)
        )

    def test_integer_order_is_derivative_norm(self, grid_1d):
        f = sample_function(lambda x: np.sin(2 * np.pi * x), grid_1d)
        assert higher_slobodeckij_seminorm(f, 1.0) == pytest.approx(2 * np.pi / np.sqrt(2))

    def test_order_above_one_uses_derivative(self, grid_1d):
        f = sample_function(lambda x: np.sin(2 * np.pi * x), grid_1d)
        g = sample_function(lambda x: 2 * np.pi * np.cos(2 * np.pi * x), grid_1d)
        assert higher_slobodeckij_seminorm(f, 1.5) == pytest.approx(
            slobodeckij_seminorm(g, 0.5), rel=1e-9
        )

    def test_nonpositive(self, grid_1d):
        f = sample_function(lambda x: x * 0, grid_1d)
        with pytest.raises(DomainError):
            higher_slobodeckij_seminorm(f, -1.0)


# ---------------------------------------------------------------------------
# TestWindowed
# ---------------------------------------------------------------------------
class TestWindowed:
    def test_holder_constant_is_zero(self, constant_1d):
        assert holder_quotient(constant_1d, 0.5) == 0.0

    def test_holder_smooth_mode_bounded(self, grid_1d):
        f = sample_function(lambda x: np.exp(2j * np.pi * x), grid_1d)
        # |e(x) - e(y)| <= min(2π|x - y|, 2), largest at |x - y| = 1/π
        assert holder_quotient(f, 0.5) <= 2 * np.sqrt(np.pi) + 1e-12

    def test_holder_without_ball_on_plane(self):
        f = sample_function(lambda x, y: np.exp(2j * np.pi * x) + 0 * y, TorusGrid(d=2, n=128))
        # 2 sin(πt) / √t on the torus peaks at t ≈ 0.371
        assert holder_quotient(f, 0.5) == pytest.approx(3.0177, rel=1e-3)

    def test_holder_band_without_ball_on_plane(self):
        f = sample_function(lambda x, y: np.exp(2j * np.pi * x) + 0 * y, TorusGrid(d=2, n=64))
        window = ScaleWindow(min_separation=1 / 64, max_separation=1 / 64)
        expected = 2 * np.sin(np.pi / 64) * np.sqrt(64)
        assert holder_quotient(f, 0.5, window) == pytest.approx(expected)

    def test_holder_scan_at_power_zero(self, w03_1d):
        radii = dyadic(4, 8)
        bounded = holder_scan(w03_1d, 0.3, radii, center=(0.0,))
        assert max(bounded.values) <= 2.0
        growing = holder_scan(w03_1d, 0.5, radii, center=(0.0,))
        assert loglog_fit(growing).slope == pytest.approx(-0.2, abs=0.05)

    def test_holder_empty_window(self, constant_1d):
        window_ball = Ball(center=(0.0,), radius=1e-4)
        with pytest.raises(EmptyWindowError):
            holder_quotient(constant_1d, 0.5, ScaleWindow(ball=window_ball))

    def test_holder_exponent_domain(self, constant_1d):
        with pytest.raises(DomainError):
            holder_quotient(constant_1d, 1.0)

    def test_ball_norms_of_constant(self, constant_1d):
        ball = Ball(center=(0.0,), radius=0.25)
        assert ball_slobodeckij_seminorm(constant_1d, ball, 0.5) == 0.0
        assert ball_lr_norm(constant_1d, ball) == pytest.approx(np.sqrt(0.5), rel=1e-2)
        assert ball_lr_norm(constant_1d, ball, centered=True) == 0.0

    def test_ball_wraps_around_chart(self, grid_1d):
        f = sample_function(lambda x: np.cos(2 * np.pi * x), grid_1d)
        left = ball_lr_norm(f, Ball(center=(-0.5,), radius=0.1))
        right = ball_lr_norm(f, Ball(center=(0.5,), radius=0.1))
        assert left == pytest.approx(right)

    def test_ball_without_points(self, constant_1d):
        with pytest.raises(EmptyWindowError):
            ball_lr_norm(constant_1d, Ball(center=(0.5 / 256,), radius=1e-4))

    def test_ball_dimension_mismatch(self, constant_1d):
        with pytest.raises(DomainError):
            ball_lr_norm(constant_1d, Ball(center=(0.0, 0.0), radius=0.1))


# ---------------------------------------------------------------------------
# TestMixedHolder
# ---------------------------------------------------------------------------
class TestMixedHolder:
    def test_smooth_profile_is_monotone(self):
        grid = TorusGrid(d=2, n=128)
        f = sample_function(lambda x, y: np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y), grid)
        aniso = AnisoParams(s_vec=(4.0, 4.0))  # α = 3
        with pytest.raises(DomainError):
            mixed_holder_profile(f, aniso, 0, [1, 2, 4])
        aniso = AnisoParams(s_vec=(0.8, 4.0))  # α_0 = 0.2
        profile = mixed_holder_profile(f, aniso, 0, [1, 2, 4, 8, 16])
        assert profile.metadata["alpha"] == pytest.approx(0.2)
        assert is_modulus_monotone(profile)
        relative = relative_modulus(profile)
        assert max(relative.values) == pytest.approx(1.0)

    def test_axis_out_of_range(self, grid_1d):
        f = sample_function(lambda x: np.sin(2 * np.pi * x), grid_1d)
        with pytest.raises(DomainError):
            mixed_holder_profile(f, AnisoParams(s_vec=(0.8,)), 1, [1, 2])

    def test_growing_modulus_is_not_monotone(self, w03_1d):
        series = holder_scan(w03_1d, 0.5, dyadic(4, 8), center=(0.0,))
        assert not is_modulus_monotone(series)
