"""Tests for the Zak transform, Gabor constants and localization scans."""

import numpy as np
import pytest

from multiplier_lab.config import AscentConfig
from multiplier_lab.core.exceptions import DomainError
from multiplier_lab.core.fit import loglog_fit
from multiplier_lab.models.field_models import FreqBox
from multiplier_lab.models.report_models import WeightedConstantEstimate
from multiplier_lab.operators.exceptions import DegenerateWeightError
from multiplier_lab.systems.exceptions import DecayCertificateError
from multiplier_lab.systems.zak import (
    GaborWindow,
    blt_scan,
    box_window,
    gabor_cq_lower_bound,
    gabor_cq_scan,
    gabor_weight,
    gaussian_window,
    h_beta_window,
    localization_integral,
    localization_profile,
    localization_verdict,
    min_modulus_scan,
    quasi_periodicity_residual,
    weight_grid_size,
    weighted_constant_scan,
    weighted_exponential_report,
    zak_minimum,
    zak_report,
    zak_transform,
    zak_values,
)

FAST = AscentConfig(restarts=4, max_iter=2000)


# ---------------------------------------------------------------------------
# TestWindows
# ---------------------------------------------------------------------------
class TestWindows:
    def test_gaussian_norm(self):
        assert gaussian_window().l2_norm() == pytest.approx(2**-0.25)

    def test_h_beta_norm(self):
        expected = 2 * 0.5**1.3 / 1.3
        assert h_beta_window(0.3).l2_norm() ** 2 == pytest.approx(expected, rel=1e-6)

    def test_short_certificate_is_rejected(self):
        with pytest.raises(DecayCertificateError):
            gaussian_window(T=2.0).check_decay()

    def test_from_samples(self):
        window = GaborWindow.from_samples([0.0, 1.0, 0.0], h=0.5)
        assert window.T == 0.5
        assert window(0.0) == 1.0
        assert window(0.25) == pytest.approx(0.5)
        assert window(0.7) == 0.0
        window.check_decay()

    @pytest.mark.parametrize(("samples", "h"), [([1.0], 0.5), ([1.0, 2.0], 0.0)])
    def test_from_samples_rejects(self, samples, h):
        with pytest.raises(DomainError):
            GaborWindow.from_samples(samples, h)


# ---------------------------------------------------------------------------
# TestZakTransform
# ---------------------------------------------------------------------------
class TestZakTransform:
    def test_gaussian_checks(self):
        report = zak_report(gaussian_window(), 256)
        assert report.passed
        assert report.quasi_periodicity_residual < 1e-8
        assert report.unitarity_defect < 1e-6

    def test_gaussian_zero_at_half_half(self):
        M = 64
        report = zak_report(gaussian_window(), M)
        assert abs(report.minimum.x - 0.5) <= 1 / M
        assert abs(report.minimum.y - 0.5) <= 1 / M
        assert report.minimum.cell in report.zero_candidates

    def test_minimum_is_the_smallest_cell(self):
        Z = zak_transform(gaussian_window(), 64)
        minimum = zak_minimum(Z)
        assert minimum.value == pytest.approx(float(Z.modulus.min()))
        assert Z.modulus[minimum.cell] == minimum.value

    def test_fft_rows_match_direct_sum(self):
        window = gaussian_window()
        Z = zak_transform(window, 16)
        X, Y = np.meshgrid(Z.axis(), Z.axis(), indexing="ij")
        np.testing.assert_allclose(Z.values, zak_values(window, X, Y), atol=1e-12)

    def test_box_window_has_unit_modulus(self):
        report = zak_report(box_window(), 32)
        assert report.passed
        assert report.minimum.value == pytest.approx(1.0)
        assert report.zero_candidates == []

    def test_min_modulus_vanishes_linearly(self):
        series = min_modulus_scan(gaussian_window(), [16, 32, 64, 128])
        assert loglog_fit(series).slope == pytest.approx(-1.0, abs=0.1)

    def test_unchecked_truncation_breaks_quasi_periodicity(self):
        Z = zak_transform(gaussian_window(T=0.5), 32, check_tail=False)
        assert quasi_periodicity_residual(Z) > 1e-8


# ---------------------------------------------------------------------------
# TestGaborConstant
# ---------------------------------------------------------------------------
class TestGaborConstant:
    @pytest.mark.parametrize(("N", "expected"), [(2, 32), (10, 64), (40, 256)])
    def test_weight_grid_size(self, N, expected):
        assert weight_grid_size(N) == expected

    def test_box_window_weight_is_one(self):
        weight = gabor_weight(box_window(), 16)
        np.testing.assert_allclose(weight.values, 1.0, atol=1e-12)

    def test_box_window_is_stable(self):
        scan = gabor_cq_scan(box_window(), 2.0, [1, 2, 4, 8], config=FAST)
        assert scan.stable
        assert scan.passed
        assert [e.value for e in scan.estimates] == pytest.approx([1.0] * 4)

    def test_gaussian_constant_decays(self):
        scan = gabor_cq_scan(gaussian_window(), 2.0, [2, 4, 8], config=FAST)
        assert not scan.stable
        assert scan.findings[0].code == "constant_decays"
        values = [e.value for e in scan.estimates]
        assert values[0] > values[1] > values[2]

    def test_three_boxes_are_enough(self):
        values = [0.5646, 0.5249, 0.4913]
        estimates = [
            WeightedConstantEstimate(q=40.0, N=N, value=v, structured=v, ascent=v)
            for N, v in zip([8, 16, 32], values)
        ]
        scan = weighted_constant_scan(estimates, 40.0, "three_boxes")
        assert scan.stable
        assert scan.fit is None
        assert scan.slope == pytest.approx(-0.10, abs=0.01)

    def test_single_box_is_not_stable(self):
        estimate = WeightedConstantEstimate(q=4.0, N=8, value=1.0, structured=1.0, ascent=1.0)
        scan = weighted_constant_scan([estimate], 4.0, "one_box")
        assert scan.fit is None
        assert not scan.stable
        assert scan.findings[0].code == "too_few_boxes"

    def test_single_box_bound(self):
        estimate = gabor_cq_lower_bound(box_window(), 4.0, FreqBox(d=2, N=2), config=FAST)
        # ‖a‖_2 / ‖a‖_4 >= 1, attained at a basis vector
        assert estimate.value == pytest.approx(1.0)
        assert isinstance(estimate, WeightedConstantEstimate)
        assert estimate.N == 2
        assert estimate.value <= min(estimate.structured, estimate.ascent)

    def test_needs_two_dimensional_box(self):
        with pytest.raises(DomainError):
            gabor_cq_lower_bound(box_window(), 4.0, FreqBox(d=1, N=2))

    def test_degenerate_window(self):
        zero = GaborWindow(label="zero", func=lambda x: 0 * x, T=1.0)
        with pytest.raises(DegenerateWeightError):
            gabor_cq_scan(zero, 2.0, [1, 2, 3, 4])


# ---------------------------------------------------------------------------
# TestLocalization
# ---------------------------------------------------------------------------
class TestLocalization:
    def test_gaussian_integral(self):
        value = localization_integral(gaussian_window(), 0.0, 8.0)
        assert value == pytest.approx(2**-0.5, rel=1e-6)

    def test_frequency_side_of_gaussian_matches_time(self):
        window = gaussian_window()
        assert localization_integral(window, 2.0, 8.0, side="frequency") == pytest.approx(
            localization_integral(window, 2.0, 8.0)
        )

    @pytest.mark.parametrize(("t", "finite"), [(0.5, True), (1.5, False)])
    def test_box_window_frequency_threshold(self, t, finite):
        profile = localization_profile(box_window().transform, t)
        assert localization_verdict(profile, "frequency", t).finite is finite

    def test_compact_support_is_finite(self):
        profile = localization_profile(box_window(), 5.0)
        verdict = localization_verdict(profile, "time", 5.0)
        assert verdict.finite
        assert verdict.assessment is None

    def test_two_dimensional_profile_is_separable(self):
        profile = localization_profile(gaussian_window(), 0.0, [16.0], d=2)
        assert profile.values[0] == pytest.approx(0.5, rel=1e-6)

    @pytest.mark.parametrize(
        ("kwargs", "message"),
        [({"t": -1.0, "R": 1.0}, "t must"), ({"t": 1.0, "R": 0.0}, "R must")],
    )
    def test_domain(self, kwargs, message):
        with pytest.raises(DomainError, match=message):
            localization_integral(gaussian_window(), **kwargs)

    def test_missing_transform(self):
        window = GaborWindow.from_samples([0.0, 1.0, 0.0], h=0.5)
        with pytest.raises(DomainError):
            localization_integral(window, 1.0, 4.0, side="frequency")

    def test_unknown_side(self):
        with pytest.raises(DomainError):
            localization_integral(gaussian_window(), 1.0, 4.0, side="space")


# ---------------------------------------------------------------------------
# TestBLT
# ---------------------------------------------------------------------------
class TestBLT:
    def test_gaussian_is_forbidden(self):
        report = blt_scan(gaussian_window(), 2.0, [1.5, 2.0, 3.0])
        assert report.symmetric_threshold == pytest.approx(2.0)
        assert report.region_lower == pytest.approx(1.0)
        assert (2.0, 2.0) in report.forbidden_pairs
        assert (1.5, 3.0) in report.forbidden_pairs
        assert not report.passed

    def test_box_window_is_allowed(self):
        report = blt_scan(box_window(), 2.0, [1.5, 2.0, 3.0])
        assert report.passed
        assert report.forbidden_pairs == []

    def test_q_below_two(self):
        with pytest.raises(DomainError):
            blt_scan(gaussian_window(), 1.5, [2.0])


# ---------------------------------------------------------------------------
# TestExponentialSystem
# ---------------------------------------------------------------------------
class TestExponentialSystem:
    NS = [64, 128, 256, 512, 1024]

    def test_smooth_positive_weight(self):
        report = weighted_exponential_report(lambda x: 2 + np.cos(2 * np.pi * x), 1, self.NS)
        assert report.riesz_basis
        assert report.exact

    def test_integrable_reciprocal(self):
        report = weighted_exponential_report(
            lambda x: np.abs(np.sin(np.pi * x)) ** 0.5, 1, self.NS
        )
        assert not report.riesz_basis
        assert report.exact

    def test_non_integrable_reciprocal(self):
        report = weighted_exponential_report(lambda x: np.sin(np.pi * x) ** 2, 1, self.NS)
        assert not report.riesz_basis
        assert not report.exact
