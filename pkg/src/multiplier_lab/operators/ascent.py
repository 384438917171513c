"""Mixed (p,q) operator norms of dense matrices.

Boyd's power method: a ← dual_{p'}(A* dual_q(A a)), where dual_r(x) is the unit
ℓ^{r'} vector norming x in ℓ^r. Every iterate is an explicit witness, so the best
ratio ‖A a‖_q / ‖a‖_p found is a certified lower bound on ‖A‖_{p→q}.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from multiplier_lab.config import AscentConfig
from multiplier_lab.core.exceptions import DomainError
from multiplier_lab.core.grid import lq_norm_vector
from multiplier_lab.core.parallel import indexed_map
from multiplier_lab.models.field_models import freeze_array
from multiplier_lab.models.report_models import MixedNormEstimate

logger = logging.getLogger(__name__)

DEFAULT_ASCENT = AscentConfig()


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1)


def dual_vector(x: np.ndarray, r: float) -> np.ndarray:
    """Unit ℓ^{r'} vector y with Σ conj(y) x = ‖x‖_r."""
    x = np.asarray(x, dtype=complex)
    magnitude = np.abs(x)
    peak = magnitude.max(initial=0.0)
    if peak == 0:
        return np.zeros_like(x)
    phase = np.where(magnitude > 0, x / np.where(magnitude > 0, magnitude, 1.0), 0.0)
    if np.isinf(r):
        y = np.zeros_like(x)
        i = int(np.argmax(magnitude))
        y[i] = phase[i]
        return y
    if r == 1:
        return phase
    y = (magnitude / peak) ** (r - 1) * phase
    return y / lq_norm_vector(y, conjugate_exponent(r))


def ratio(matrix: np.ndarray, a: np.ndarray, p: float, q: float) -> float:
    """‖A a‖_q / ‖a‖_p, zero for a = 0."""
    denominator = lq_norm_vector(a, p)
    if denominator == 0:
        return 0.0
    return lq_norm_vector(matrix @ a, q) / denominator


@dataclass(frozen=True)
class _AscentRun:
    value: float
    vector: np.ndarray
    iterations: int
    converged: bool


def _ascend(
    matrix: np.ndarray, start: np.ndarray, p: float, q: float, max_iter: int, tol: float
) -> _AscentRun:
    adjoint = matrix.conj().T
    p_dual = conjugate_exponent(p)
    a = start / lq_norm_vector(start, p)
    value = ratio(matrix, a, p, q)
    for iteration in range(1, max_iter + 1):
        z = adjoint @ dual_vector(matrix @ a, q)
        if not np.any(z):
            return _AscentRun(value, a, iteration, True)
        candidate = dual_vector(z, p_dual)
        new_value = ratio(matrix, candidate, p, q)
        if new_value < value:
            # monotone for p <= q up to rounding; keep the better iterate
            return _AscentRun(value, a, iteration, True)
        done = new_value - value <= tol * max(new_value, np.finfo(float).tiny)
        a, value = candidate, new_value
        if done:
            return _AscentRun(value, a, iteration, True)
    return _AscentRun(value, a, max_iter, False)


def _random_starts(size: int, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.standard_normal(size) + 1j * rng.standard_normal(size) for _ in range(count)]


def _exact_estimate(matrix: np.ndarray, p: float, q: float) -> MixedNormEstimate | None:
    """Closed forms: p = 1 (columns), q = ∞ (rows), p = q = 2 (largest singular value)."""
    if p == 1:
        columns = [lq_norm_vector(matrix[:, j], q) for j in range(matrix.shape[1])]
        j = int(np.argmax(columns))
        witness = np.zeros(matrix.shape[1], dtype=complex)
        witness[j] = 1.0
        value = columns[j]
        return MixedNormEstimate(
            lower=value, upper=value, p=p, q=q, witness=freeze_array(witness),
            witness_label=f"basis[{j}]",
        )
    if np.isinf(q):
        p_dual = conjugate_exponent(p)
        rows = [lq_norm_vector(matrix[i], p_dual) for i in range(matrix.shape[0])]
        i = int(np.argmax(rows))
        witness = dual_vector(matrix[i].conj(), p_dual)
        return MixedNormEstimate(
            lower=rows[i], upper=rows[i], p=p, q=q, witness=freeze_array(witness),
            witness_label=f"row[{i}]",
        )
    if p == 2 and q == 2:
        _, sigma, vh = scipy.linalg.svd(matrix)
        return MixedNormEstimate(
            lower=float(sigma[0]), upper=float(sigma[0]), p=p, q=q,
            witness=freeze_array(vh[0].conj()), witness_label="singular_vector",
        )
    return None


def estimate_mixed_norm(
    matrix: np.ndarray,
    p: float,
    q: float,
    config: AscentConfig = DEFAULT_ASCENT,
    witnesses: dict[str, np.ndarray] | None = None,
) -> MixedNormEstimate:
    """Two-sided estimate of ‖A‖_{p→q} for 1 <= p <= q <= ∞.

    Args:
        matrix: Dense operator matrix.
        p: Input exponent.
        q: Output exponent.
        config: Restarts, iteration cap, tolerance, seed and worker count.
        witnesses: Labelled structured vectors. Their ratios enter the certified lower
            bound and they seed the ascent alongside the random restarts.

    Returns:
        MixedNormEstimate whose ``lower`` is the best explicit witness ratio and whose
        ``witness`` attains it with unit ℓ^p norm.

    Raises:
        DomainError: If the exponents are outside 1 <= p <= q.
    """
    if not (p >= 1 and q >= p):
        raise DomainError(f"need 1 <= p <= q, got p={p}, q={q}")
    matrix = np.asarray(matrix, dtype=complex)
    exact = _exact_estimate(matrix, p, q)
    if exact is not None:
        return exact

    labelled = dict(witnesses or {})
    # basis vectors realize the column norms
    column_norms = [lq_norm_vector(matrix[:, j], q) for j in range(matrix.shape[1])]
    best_column = int(np.argmax(column_norms))
    basis = np.zeros(matrix.shape[1], dtype=complex)
    basis[best_column] = 1.0
    labelled[f"basis[{best_column}]"] = basis

    candidates = [(label, np.asarray(v, dtype=complex)) for label, v in labelled.items()]
    candidates = [(label, v) for label, v in candidates if lq_norm_vector(v, p) > 0]
    starts = [v for _, v in candidates] + _random_starts(
        matrix.shape[1], config.restarts, config.seed
    )
    runs = indexed_map(
        lambda start: _ascend(matrix, start, p, q, config.max_iter, config.tol),
        starts,
        config.workers,
    )

    # deterministic reduce: highest value, earliest index on ties
    best_run = max(range(len(runs)), key=lambda i: (runs[i].value, -i))
    run = runs[best_run]
    lower, label, witness = run.value, f"ascent[{best_run}]", run.vector
    for name, vector in candidates:
        value = ratio(matrix, vector, p, q)
        if value > lower:
            lower, label, witness = value, name, vector / lq_norm_vector(vector, p)
    converged = all(r.converged for r in runs)
    if not converged:
        logger.warning(
            "(%g,%g) ascent: %d of %d runs hit max_iter=%d",
            p, q, sum(not r.converged for r in runs), len(runs), config.max_iter,
        )
    logger.debug("(%g,%g) ascent: value %.10g from %s", p, q, lower, label)
    return MixedNormEstimate(
        lower=lower,
        upper=max(run.value, lower),
        p=p,
        q=q,
        iterations=max(r.iterations for r in runs),
        converged=converged,
        witness=freeze_array(witness),
        witness_label=label,
    )


def monte_carlo_pq_value(
    matrix: np.ndarray,
    p: float,
    q: float,
    samples: int = 100_000,
    seed: int = 0,
    batch: int = 10_000,
) -> float:
    """max ‖A x‖_q / ‖x‖_p over random complex Gaussian vectors x."""
    matrix = np.asarray(matrix, dtype=complex)
    rng = np.random.default_rng(seed)
    best = 0.0
    for start in range(0, samples, batch):
        count = min(batch, samples - start)
        x = rng.standard_normal((matrix.shape[1], count)) + 1j * rng.standard_normal(
            (matrix.shape[1], count)
        )
        images = matrix @ x
        best = max(best, float(np.max(_column_norms(images, q) / _column_norms(x, p))))
    return best


def _column_norms(x: np.ndarray, r: float) -> np.ndarray:
    magnitude = np.abs(x)
    if np.isinf(r):
        return magnitude.max(axis=0)
    return np.sum(magnitude**r, axis=0) ** (1.0 / r)
