"""Tests for the mixed-norm power method."""

import numpy as np
import pytest

from multiplier_lab.config import AscentConfig
from multiplier_lab.core.exceptions import DomainError
from multiplier_lab.core.grid import lq_norm_vector
from multiplier_lab.operators.ascent import (
    conjugate_exponent,
    dual_vector,
    estimate_mixed_norm,
    monte_carlo_pq_value,
    ratio,
)

FAST = AscentConfig(restarts=8, max_iter=2000, seed=3)


@pytest.fixture
def small_matrix(rng):
    return rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4))


class TestDuality:
    @pytest.mark.parametrize(("p", "expected"), [(1, np.inf), (np.inf, 1.0), (2, 2.0), (4, 4 / 3)])
    def test_conjugate_exponent(self, p, expected):
        assert conjugate_exponent(p) == pytest.approx(expected)

    @pytest.mark.parametrize("r", [1.0, 1.5, 3.0, np.inf])
    def test_dual_vector_norms_x(self, rng, r):
        x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        y = dual_vector(x, r)
        assert np.vdot(y, x).real == pytest.approx(lq_norm_vector(x, r))
        assert lq_norm_vector(y, conjugate_exponent(r)) == pytest.approx(1.0)

    def test_dual_of_zero(self):
        assert not np.any(dual_vector(np.zeros(3), 3.0))

    def test_ratio_of_zero_vector(self, small_matrix):
        assert ratio(small_matrix, np.zeros(4), 2.0, 3.0) == 0.0


class TestExactCases:
    def test_p_one_is_max_column(self, small_matrix):
        estimate = estimate_mixed_norm(small_matrix, 1.0, 3.0)
        expected = max(lq_norm_vector(small_matrix[:, j], 3.0) for j in range(4))
        assert estimate.lower == estimate.upper == pytest.approx(expected)
        assert estimate.witness_label.startswith("basis[")

    def test_q_inf_is_max_row(self, small_matrix):
        estimate = estimate_mixed_norm(small_matrix, 3.0, np.inf)
        expected = max(lq_norm_vector(row, 1.5) for row in small_matrix)
        assert estimate.lower == pytest.approx(expected)
        assert ratio(small_matrix, estimate.witness, 3.0, np.inf) == pytest.approx(expected)

    def test_two_two_is_largest_singular_value(self, small_matrix):
        estimate = estimate_mixed_norm(small_matrix, 2.0, 2.0)
        assert estimate.lower == pytest.approx(np.linalg.norm(small_matrix, 2))
        assert estimate.witness_label == "singular_vector"


class TestAscent:
    def test_identity_two_to_four(self):
        estimate = estimate_mixed_norm(np.eye(6), 2.0, 4.0, FAST)
        assert estimate.lower == pytest.approx(1.0)
        assert estimate.upper >= estimate.lower

    def test_witness_attains_lower_bound(self, small_matrix):
        estimate = estimate_mixed_norm(small_matrix, 1.5, 3.0, FAST)
        assert lq_norm_vector(estimate.witness, 1.5) == pytest.approx(1.0)
        assert ratio(small_matrix, estimate.witness, 1.5, 3.0) == pytest.approx(estimate.lower)

    def test_beats_random_search(self, small_matrix):
        estimate = estimate_mixed_norm(small_matrix, 2.0, 3.0, FAST)
        sampled = monte_carlo_pq_value(small_matrix, 2.0, 3.0, samples=20_000, seed=1)
        assert estimate.lower >= sampled * (1 - 1e-9)

    def test_structured_witness_can_win(self):
        matrix = np.ones((4, 4))
        flat = np.ones(4)
        estimate = estimate_mixed_norm(
            matrix, 2.0, 3.0, AscentConfig(restarts=0), witnesses={"flat": flat}
        )
        # ‖J 1‖_3 / ‖1‖_2 = 4·4^{1/3} / 2
        assert estimate.lower == pytest.approx(2 * 4 ** (1 / 3))

    @pytest.mark.parametrize("workers", [1, 3])
    def test_deterministic(self, small_matrix, workers):
        config = AscentConfig(restarts=6, seed=11, workers=workers)
        first = estimate_mixed_norm(small_matrix, 2.0, 4.0, config)
        again = estimate_mixed_norm(small_matrix, 2.0, 4.0, AscentConfig(restarts=6, seed=11))
        assert first.lower == again.lower
        assert first.witness_label == again.witness_label
        np.testing.assert_array_equal(first.witness, again.witness)

    @pytest.mark.parametrize(("p", "q"), [(3.0, 2.0), (0.5, 2.0)])
    def test_exponent_domain(self, small_matrix, p, q):
        with pytest.raises(DomainError):
            estimate_mixed_norm(small_matrix, p, q)
