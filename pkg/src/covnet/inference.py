"""Edge-wise chi-squared tests, min-p combination, and BY FDR control."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateVariance,
    InvalidInput,
    SingularCovariance,
)

_EPS = 1e-16
_MAX_ITER = 500


def _lower_gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by series, for x < a + 1."""
    if x == 0.0:
        return 0.0
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by continued fraction (Lentz)."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def chisq_upper_tail(x: float, dof: int) -> float:
    """Upper tail probability P(chi2_dof > x) = Q(dof/2, x/2).

    Series/continued-fraction switch at x/2 = dof/2 + 1 gives absolute error
    below 1e-12 over the tested grid; for dof = 2 this reduces to exp(-x/2).
    """
    if not (isinstance(dof, (int, np.integer)) and dof >= 1):
        raise InvalidInput(f"dof must be an integer >= 1, got {dof!r}")
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise InvalidInput(f"statistic must be finite and >= 0, got {x!r}")
    a = 0.5 * dof
    half = 0.5 * x
    if half == 0.0:
        return 1.0
    if half < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_gamma_series(a, half)))
    return min(1.0, max(0.0, _upper_gamma_cf(a, half)))


class TestKind(enum.Enum):
    UNADJUSTED_T = "unadjusted_t"
    ADJUSTED_S = "adjusted_s"


class Direction(enum.Enum):
    J_ON_K = "j_on_k"
    K_ON_J = "k_on_j"
    MIN_P = "min_p"


@dataclass(frozen=True)
class EdgeTest:
    """One edge-wise test: statistic, degrees of freedom, and p-value."""

    pair: tuple[int, int]
    statistic: float
    dof: int
    p_value: float
    kind: TestKind
    direction: Direction = Direction.J_ON_K


def test_unadjusted(
    beta_1: float, tau_1: float, beta_2: float, tau_2: float, pair=(0, 1)
) -> EdgeTest:
    """Chi-squared(1) test of equal unadjusted coefficients between groups.

    ``tau`` arguments are the variances of the coefficient estimates.
    """
    denom = tau_1 + tau_2
    if denom <= 0:
        raise DegenerateVariance(f"tau_1 + tau_2 must be positive, got {denom}")
    stat = (beta_1 - beta_2) ** 2 / denom
    return EdgeTest(tuple(pair), float(stat), 1, chisq_upper_tail(stat, 1), TestKind.UNADJUSTED_T)


def test_adjusted(
    a_1: np.ndarray, O_1: np.ndarray, a_2: np.ndarray, O_2: np.ndarray, pair=(0, 1)
) -> EdgeTest:
    """Chi-squared(d) test of equal varying-coefficient vectors between groups.

    The pooled covariance gets a 1e-12 * trace jitter before inversion;
    SingularCovariance is raised when it still cannot be factorized.
    """
    a_1 = np.asarray(a_1, dtype=np.float64).ravel()
    a_2 = np.asarray(a_2, dtype=np.float64).ravel()
    d = a_1.size
    if a_2.size != d:
        raise InvalidInput("group coefficient vectors have different lengths")
    pooled = np.asarray(O_1, dtype=np.float64) + np.asarray(O_2, dtype=np.float64)
    pooled = 0.5 * (pooled + pooled.T)
    pooled = pooled + 1e-12 * np.trace(pooled) * np.eye(d)
    diff = a_1 - a_2
    try:
        L = np.linalg.cholesky(pooled)
    except np.linalg.LinAlgError:
        raise SingularCovariance("pooled covariance is not positive definite") from None
    z = np.linalg.solve(L, diff)
    stat = float(z @ z)
    return EdgeTest(tuple(pair), stat, d, chisq_upper_tail(stat, d), TestKind.ADJUSTED_S)


def combine_min_p(p_jk: float | None, p_kj: float | None) -> float:
    """Minimum of the two directional p-values (anti-conservative by design).

    A missing direction passes the available p-value through.
    """
    ps = [p for p in (p_jk, p_kj) if p is not None]
    if not ps:
        raise InvalidInput("at least one directional p-value is required")
    for p in ps:
        if not (0.0 <= p <= 1.0):
            raise InvalidInput(f"p-value {p} outside [0, 1]")
    return min(ps)


def by_fdr(p_values, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Benjamini-Yekutieli step-up: returns (q_values, rejected mask).

    q-values are the monotone-adjusted p * m * c(m) / rank capped at 1,
    with c(m) the harmonic sum; rejection at level kappa is q <= kappa.
    """
    p = np.asarray(p_values, dtype=np.float64)
    if p.size and ((p < 0) | (p > 1)).any():
        raise InvalidInput("p-values must lie in [0, 1]")
    if not (0 < kappa < 1):
        raise InvalidInput(f"kappa must lie in (0, 1), got {kappa}")
    m = p.size
    if m == 0:
        return np.array([]), np.array([], dtype=bool)
    c_m = np.sum(1.0 / np.arange(1, m + 1))
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m * c_m / np.arange(1, m + 1)
    q_sorted = np.minimum(1.0, np.minimum.accumulate(ranked[::-1])[::-1])
    q = np.empty(m)
    q[order] = q_sorted
    return q, q <= kappa


@dataclass(frozen=True)
class DifferentialNetwork:
    """Min-p edge tests with BY-adjusted q-values and the rejection set."""

    edges: tuple[EdgeTest, ...]
    q_values: np.ndarray
    rejected: frozenset[tuple[int, int]]
    kappa: float
    anti_conservative_min_p: bool = True

    @property
    def rejected_count(self) -> int:
        return len(self.rejected)


def build_differential_network(edge_tests, kappa: float) -> DifferentialNetwork:
    """Apply BY control at level kappa to a list of min-p EdgeTests."""
    edge_tests = tuple(edge_tests)
    pvals = np.array([t.p_value for t in edge_tests])
    q, rej = by_fdr(pvals, kappa)
    rejected = frozenset(t.pair for t, r in zip(edge_tests, rej) if r)
    return DifferentialNetwork(edge_tests, q, rejected, kappa)


def network_rows(network: DifferentialNetwork, names=None):
    """Rows (j, k, statistic, dof, p, q, rejected) for TSV/JSON emission."""
    rows = []
    for t, q in zip(network.edges, network.q_values):
        j, k = t.pair
        rows.append(
            {
                "j": names[j] if names else j,
                "k": names[k] if names else k,
                "statistic": t.statistic,
                "dof": t.dof,
                "p": t.p_value,
                "q": float(q),
                "rejected": t.pair in network.rejected,
            }
        )
    return rows
