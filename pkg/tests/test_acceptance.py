"""End-to-end checks of the quantitative claims the lab reproduces.

Every test here sweeps refinements or large boxes and is marked slow.
"""

import numpy as np
import pytest

from multiplier_lab.analysis.constructions import (
    BetaParams,
    h_beta,
    reciprocal_power_scan,
    w_beta,
)
from multiplier_lab.analysis.sobolev import hs_partial_sums
from multiplier_lab.config import AscentConfig
from multiplier_lab.core.fit import classify_partial_sums
from multiplier_lab.core.grid import lp_norm, sample_function, synthesize
from multiplier_lab.models.field_models import FreqBox, SampleField, TorusGrid
from multiplier_lab.models.scan_models import DivergenceVerdict
from multiplier_lab.operators.ascent import monte_carlo_pq_value
from multiplier_lab.operators.matrix_multiplier import (
    HermitianField,
    build_block_operator,
    equivalence_check,
    matrix_norm_2_q,
    unitary_conjugate,
)
from multiplier_lab.operators.multiplier import (
    build_operator,
    norm_2_2,
    norm_2_inf,
    norm_2_q,
    tau_scan_report,
)
from multiplier_lab.systems.shift_invariant import (
    GeneratorSet,
    h_beta_generator,
    sis_cq_diagnostic,
)
from multiplier_lab.systems.zak import (
    gabor_cq_scan,
    gaussian_window,
    localization_profile,
    localization_verdict,
)
from tests.helpers import dyadic, random_coeffs

pytestmark = pytest.mark.slow

CONVERGENT = DivergenceVerdict.CONVERGENT
DIVERGENT = DivergenceVerdict.DIVERGENT


# ---------------------------------------------------------------------------
# TestOperatorNorms
# ---------------------------------------------------------------------------
class TestOperatorNorms:
    def test_cosine_symbol_norm(self):
        u = sample_function(lambda x: 2 + np.cos(2 * np.pi * x), TorusGrid(d=1, n=512))
        op = build_operator(u, FreqBox(d=1, N=64))
        # tridiagonal Toeplitz: 2 + cos(π/130)
        assert norm_2_2(op) == pytest.approx(3.0, rel=0.02)
        assert norm_2_2(op) <= 3.0

    @pytest.mark.parametrize("seed", range(10))
    def test_row_norm_of_trigonometric_symbol(self, seed):
        symbol = random_coeffs(FreqBox(d=1, N=3), seed=seed)
        u = synthesize(symbol, TorusGrid(d=1, n=64))
        op = build_operator(symbol, FreqBox(d=1, N=4))
        assert norm_2_inf(op) == pytest.approx(lp_norm(u, 2.0), rel=1e-10)

    def test_row_norm_of_w_beta(self):
        w = w_beta(BetaParams(beta=0.3), TorusGrid(d=1, n=4096))
        op = build_operator(w, FreqBox(d=1, N=64))
        assert norm_2_inf(op) == pytest.approx(lp_norm(w, 2.0), rel=1e-4)

    @pytest.mark.parametrize("seed", range(5))
    def test_ascent_beats_random_vectors(self, seed):
        op = build_operator(random_coeffs(FreqBox(d=1, N=2), seed=seed), FreqBox(d=1, N=4))
        estimate = norm_2_q(op, 4.0, AscentConfig(restarts=8, max_iter=4000, seed=seed))
        sampled = monte_carlo_pq_value(op.matrix, 2.0, 4.0, samples=100_000, seed=seed)
        assert estimate.lower >= (1 - 0.005) * sampled


# ---------------------------------------------------------------------------
# TestWBetaThreshold
# ---------------------------------------------------------------------------
class TestWBetaThreshold:
    NS = [64, 128, 256, 512, 1024, 2048]

    @pytest.mark.parametrize(
        ("q", "verdict"),
        [
            (4.0, DIVERGENT),
            (4.5, DIVERGENT),
            (5.0, DIVERGENT),
            (5.5, CONVERGENT),
            (6.0, CONVERGENT),
        ],
    )
    def test_reciprocal_flips_at_five(self, q, verdict):
        series = reciprocal_power_scan(BetaParams(beta=0.3), q, self.NS)
        assert classify_partial_sums(series).verdict == verdict

    def test_cube_mass_exponent(self):
        w = w_beta(BetaParams(beta=0.3), TorusGrid(d=1, n=2**13))
        report = tau_scan_report(w, [4.0, 6.0], dyadic(4, 10))
        assert report.mass_fit.slope == pytest.approx(0.8, abs=0.05)
        assert report.critical_q == pytest.approx(5.0, abs=0.5)
        assert [v.obstruction for v in report.verdicts] == [True, False]
        assert report.passed


# ---------------------------------------------------------------------------
# TestHBetaFrontier
# ---------------------------------------------------------------------------
class TestHBetaFrontier:
    @pytest.mark.parametrize(("s", "verdict"), [(0.62, CONVERGENT), (0.68, DIVERGENT)])
    def test_sobolev_frontier(self, s, verdict):
        # increments scale like N^{2s - 1.3}
        c = h_beta(0.3).periodized_coeffs(FreqBox(d=1, N=2048))
        series = hs_partial_sums(c, s, [128, 256, 512, 1024, 2048])
        assert classify_partial_sums(series).verdict == verdict

    @pytest.mark.parametrize(("t", "finite"), [(1.4, True), (1.6, False)])
    def test_frequency_localization(self, t, finite):
        # |ĥ_β|² ~ |x|^{-2-β}: the moment is finite iff t < 1 + β
        generator = h_beta_generator(0.45)
        profile = localization_profile(generator.time_axis, t)
        assert localization_verdict(profile, "frequency", t).finite is finite


# ---------------------------------------------------------------------------
# TestGaborStabilization
# ---------------------------------------------------------------------------
class TestGaborStabilization:
    NS = [8, 16, 32]

    def test_gaussian_stabilizes_at_large_q(self):
        scan = gabor_cq_scan(gaussian_window(), 40.0, self.NS)
        assert scan.stable
        assert scan.slope is not None
        assert min(e.value for e in scan.estimates) > 0

    def test_gaussian_decays_at_q_two(self):
        scan = gabor_cq_scan(gaussian_window(), 2.0, self.NS)
        assert not scan.stable
        assert scan.slope < -0.5


# ---------------------------------------------------------------------------
# TestSisSharpness
# ---------------------------------------------------------------------------
class TestSisSharpness:
    def test_h_beta_below_critical_exponent(self):
        # β = 0.45 < 1 - 2/q; time localization is finite iff t < 2/q' = 1.5
        H = GeneratorSet(generators=(h_beta_generator(0.45),))
        report = sis_cq_diagnostic(H, 4.0, [4, 8, 16, 32], ts=[1.4, 1.6])
        assert report.holds
        assert [v.finite for v in report.localization] == [True, False]


# ---------------------------------------------------------------------------
# TestMatrixEquivalence
# ---------------------------------------------------------------------------
def _random_hermitian_symbol(seed: int, grid: TorusGrid) -> HermitianField:
    """A_0 + A_1 e(x) + A_1* e(-x) with ‖A_0‖ = 1 and ‖A_1‖ = 0.05."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    A0 = (raw + raw.conj().T) / 2
    A0 /= np.linalg.norm(A0, 2)
    A1 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    A1 *= 0.05 / np.linalg.norm(A1, 2)
    phase = np.exp(2j * np.pi * grid.axis())[:, None, None]
    entries = A0 + A1 * phase + A1.conj().T * phase.conj()
    return HermitianField.from_entries(2, grid, entries)


class TestMatrixEquivalence:
    GRID = TorusGrid(d=1, n=64)
    BOX = FreqBox(d=1, N=8)

    @pytest.mark.parametrize("seed", range(50))
    def test_random_symbols_satisfy_both_bounds(self, seed):
        U = _random_hermitian_symbol(seed, self.GRID)
        config = AscentConfig(restarts=4, max_iter=2000, seed=seed)
        for q in (3.0, 4.0, 6.0):
            report = equivalence_check(U, q, self.BOX, config)
            assert report.passed, report.findings

    @pytest.mark.parametrize("seed", range(3))
    def test_block_ascent_beats_random_vectors(self, seed):
        U = _random_hermitian_symbol(seed, self.GRID)
        config = AscentConfig(restarts=8, max_iter=4000, seed=seed)
        estimate = matrix_norm_2_q(U, 4.0, self.BOX, config=config)
        matrix = build_block_operator(U, self.BOX).matrix
        sampled = monte_carlo_pq_value(matrix, 2.0, 4.0, samples=100_000, seed=seed)
        assert estimate.lower >= (1 - 0.005) * sampled

    def test_conjugated_w_beta_block(self):
        grid = TorusGrid(d=1, n=256)
        w = w_beta(BetaParams(beta=0.3), grid)
        ones = SampleField(grid=grid, values=np.ones(grid.shape))
        angle = np.pi / 7
        V = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        U = unitary_conjugate(HermitianField.diagonal([w, ones]), V)
        config = AscentConfig(restarts=8, max_iter=4000)
        block = matrix_norm_2_q(U, 4.0, self.BOX, config=config)
        scalar = norm_2_q(build_operator(w, self.BOX), 4.0, config)
        assert block.lower >= scalar.upper / 2
        assert block.upper <= np.sqrt(2) * scalar.lower
