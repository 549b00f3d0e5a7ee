"""Independent brute-force oracles used only by the tests.

Nothing here shares code with the production operations it certifies:
the QP solver is projected gradient descent, offsets are found by numeric
bisection, scorers are naive full sums, and the mixture sampler inverts
component weights by hand.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OracleReport:
    quantity: str
    oracle_value: float
    impl_value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.oracle_value - self.impl_value) <= self.tolerance

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.quantity}: oracle={self.oracle_value!r} "
            f"impl={self.impl_value!r} tol={self.tolerance!r}"
        )


def project_box_simplex(v, box):
    """Euclidean projection onto {0 <= x_i <= box, sum x = 1}.

    Monotone water-filling: x(t) = clip(v - t, 0, box) has a sum that
    decreases continuously in t, so bisection on t finds the simplex level.
    """
    v = np.asarray(v, dtype=np.float64)
    lo = np.min(v) - box - 1.0
    hi = np.max(v) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.sum(np.clip(v - mid, 0.0, box)) > 1.0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi), 0.0, box)


def qp_oracle(K, nu, *, stationarity_tol=1e-8, max_iter=2_000_000):
    """Minimize (1/2) g'Kg over {0 <= g_i <= 1/(nu n), sum g = 1}.

    Long-running projected gradient descent with a slowly diminishing step.
    Raises RuntimeError if the projected-gradient residual never reaches
    the requested stationarity (an oracle failure, not a product error).
    """
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    box = 1.0 / (nu * n)
    lipschitz = max(float(np.linalg.eigvalsh(K)[-1]), 1e-12)
    gamma = project_box_simplex(np.full(n, 1.0 / n), box)
    base = 1.0 / lipschitz
    for it in range(max_iter):
        grad = K @ gamma
        step = base / (1.0 + it / 50_000.0)
        nxt = project_box_simplex(gamma - step * grad, box)
        residual = float(np.max(np.abs(nxt - gamma)))
        gamma = nxt
        if residual / step <= stationarity_tol:
            return gamma
    raise RuntimeError(f"qp_oracle failed to reach stationarity {stationarity_tol}")


def qp_objective(gamma, K) -> float:
    gamma = np.asarray(gamma, dtype=np.float64)
    total = 0.0
    for i in range(len(gamma)):
        for j in range(len(gamma)):
            total += gamma[i] * gamma[j] * K[i, j]
    return 0.5 * total


def bisection_offset(scores, beta, iters=200):
    """Numeric bisection for the largest rho with empirical mass >= beta.

    The empirical mass of {s >= rho} is a step function of rho, so this
    lands within one inter-score gap of the exact order statistic.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = len(scores)

    def mass(rho):
        return np.count_nonzero(scores >= rho) / n

    lo = float(np.min(scores)) - 1.0
    hi = float(np.max(scores)) + 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mass(mid) >= beta:
            lo = mid
        else:
            hi = mid
    return lo


def naive_decision_function(gamma, X_train, x, sigma) -> float:
    """Full sum over every training point, zero coefficients included."""
    total = 0.0
    for g, row in zip(gamma, np.asarray(X_train, dtype=np.float64)):
        sq = 0.0
        for a, b in zip(row, np.asarray(x, dtype=np.float64)):
            sq += (a - b) ** 2
        total += g * math.exp(-sq / (2.0 * sigma**2))
    return total


def naive_kde_density(X, bandwidth, x) -> float:
    """Normalized Gaussian KDE evaluated by direct summation."""
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    norm = (2.0 * math.pi * bandwidth**2) ** (-d / 2.0)
    total = 0.0
    for row in X:
        sq = float(np.sum((row - np.asarray(x, dtype=np.float64)) ** 2))
        total += norm * math.exp(-sq / (2.0 * bandwidth**2))
    return total / n


def sample_mixture_independent(weights, means, stddevs, uniform_bounds, n, seed):
    """Mixture sampler sharing no code with the production generator.

    weights: per-component weights, Gaussian components first; when
    uniform_bounds (lower, upper) is given the LAST weight belongs to the
    uniform component. Components are picked by inverting the cumulative
    weights against one uniform draw per sample.
    """
    rng = np.random.default_rng(seed)
    cum = np.cumsum(weights)
    assert abs(cum[-1] - 1.0) < 1e-9
    d = len(means[0])
    out = np.empty((n, d))
    for i in range(n):
        u = rng.random()
        comp = int(np.searchsorted(cum, u, side="right"))
        comp = min(comp, len(weights) - 1)
        if uniform_bounds is not None and comp == len(weights) - 1:
            lower, upper = uniform_bounds
            out[i] = rng.uniform(lower, upper)
        else:
            out[i] = rng.normal(means[comp], stddevs[comp], size=d)
    return out


def fresh_mass(indicator, sampler, m, seed):
    """Monte Carlo P(indicator) under the sampler; returns (mass, std_error)."""
    Z = sampler(m, seed)
    inside = indicator.contains(Z)
    p = float(np.mean(inside))
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / m)
