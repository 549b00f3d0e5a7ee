"""One-class SVM dual solver.

Minimizes (1/2) gamma' K gamma over the scaled simplex slice
{0 <= gamma_i <= 1/(nu n), sum gamma_i = 1} by sequential minimal
optimization on the most violating pair of coordinates. The resulting
decision function is f(x) = sum_i gamma_i k_sigma(x, x_i) and the solver
offset rho_nu is recovered from the KKT conditions.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DimensionMismatchError, ValidationError
from .kernel import KernelBandwidth, as_bandwidth, check_finite, kernel_cross, pairwise_sq_dists, sq_dists_to_kernel

try:  # compiled inner loop; the numpy path below is arithmetic-identical
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

# Curvature floor for degenerate pair updates (duplicate training rows).
_TAU = 1e-12
# Gradient is recomputed from scratch periodically to cap roundoff drift.
_REFRESH_EVERY = 100_000


@dataclass(frozen=True)
class OcsvmConfig:
    nu: float
    sigma: KernelBandwidth
    kkt_tolerance: float = 1e-6
    max_iterations: int = 10_000_000

    def __post_init__(self):
        if not (0.0 < self.nu < 1.0):
            raise ValidationError(f"nu must lie in (0, 1), got {self.nu!r}")
        object.__setattr__(self, "sigma", as_bandwidth(self.sigma))
        if not (self.kkt_tolerance > 0):
            raise ValidationError("kkt_tolerance must be positive")
        if int(self.max_iterations) < 1:
            raise ValidationError("max_iterations must be a positive integer")
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "kkt_tolerance", float(self.kkt_tolerance))
        object.__setattr__(self, "max_iterations", int(self.max_iterations))


@dataclass(frozen=True)
class OcsvmModel:
    """Fitted dual solution.

    For models produced by fit(), ``gamma`` is aligned with the training
    rows (length train_size). Models restored from JSON only carry the
    support-vector block, so ``gamma`` then has one entry per support
    vector; the decision function is identical either way.
    """

    gamma: np.ndarray
    support_indices: np.ndarray
    support_vectors: np.ndarray
    sigma: KernelBandwidth
    nu: float
    rho_nu: float
    train_size: int
    iterations: int = field(default=0, compare=False)

    @property
    def feature_dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def support_gamma(self) -> np.ndarray:
        return self.gamma[self.support_indices]

    def to_dict(self) -> dict:
        return {
            "nu": self.nu,
            "sigma": self.sigma.sigma,
            "rho_nu": self.rho_nu,
            "support_vectors": self.support_vectors.tolist(),
            "gamma": self.support_gamma.tolist(),
            "train_size": int(self.train_size),
            "feature_dim": int(self.feature_dim),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj) -> "OcsvmModel":
        sv = np.asarray(obj["support_vectors"], dtype=np.float64)
        gamma = np.asarray(obj["gamma"], dtype=np.float64)
        if sv.ndim != 2 or len(gamma) != len(sv):
            raise ValidationError("support_vectors and gamma must pair positionally")
        if sv.shape[1] != int(obj["feature_dim"]):
            raise DimensionMismatchError(obj["feature_dim"], sv.shape[1], "model feature_dim")
        return cls(
            gamma=gamma,
            support_indices=np.arange(len(sv)),
            support_vectors=sv,
            sigma=KernelBandwidth(float(obj["sigma"])),
            nu=float(obj["nu"]),
            rho_nu=float(obj["rho_nu"]),
            train_size=int(obj["train_size"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "OcsvmModel":
        return cls.from_dict(json.loads(text))


def _smo_core_numpy(K, gamma, grad, box, tol, max_iter):
    """Reference inner loop. Mutates gamma and grad in place.

    K must be exactly symmetric (rows are used as columns). Ties in the
    pair selection break toward the lowest index, so the iterate sequence
    is deterministic for a given K.
    """
    neg_inf = -np.inf
    pos_inf = np.inf
    best_violation = np.inf
    for it in range(max_iter):
        if it and it % _REFRESH_EVERY == 0:
            grad[:] = K @ gamma
        i = int(np.argmax(np.where(gamma > 0.0, grad, neg_inf)))
        j = int(np.argmin(np.where(gamma < box, grad, pos_inf)))
        violation = grad[i] - grad[j]
        best_violation = min(best_violation, violation)
        if violation <= tol:
            return 0, it, best_violation
        curvature = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if curvature <= 0.0:
            curvature = _TAU
        step = min(violation / curvature, gamma[i], box - gamma[j])
        gamma[i] = max(gamma[i] - step, 0.0)
        gamma[j] = min(gamma[j] + step, box)
        grad += step * (K[j] - K[i])
    return 1, max_iter, best_violation


if _numba is not None:

    @_numba.njit(cache=True)
    def _smo_core_jit(K, gamma, grad, box, tol, max_iter):  # pragma: no cover
        # Same iterates as _smo_core_numpy: the gradient update for one pair
        # and the selection of the next pair are fused into a single pass,
        # which reads the exact post-update gradient values.
        n = gamma.shape[0]
        best_violation = np.inf
        gi = -np.inf
        gj = np.inf
        i = 0
        j = 0
        for a in range(n):
            ga = grad[a]
            if gamma[a] > 0.0 and ga > gi:
                gi = ga
                i = a
            if gamma[a] < box and ga < gj:
                gj = ga
                j = a
        for it in range(max_iter):
            if it != 0 and it % _REFRESH_EVERY == 0:
                for a in range(n):
                    acc = 0.0
                    for b in range(n):
                        acc += K[a, b] * gamma[b]
                    grad[a] = acc
                gi = -np.inf
                gj = np.inf
                for a in range(n):
                    ga = grad[a]
                    if gamma[a] > 0.0 and ga > gi:
                        gi = ga
                        i = a
                    if gamma[a] < box and ga < gj:
                        gj = ga
                        j = a
            violation = gi - gj
            if violation < best_violation:
                best_violation = violation
            if violation <= tol:
                return 0, it, best_violation
            curvature = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if curvature <= 0.0:
                curvature = _TAU
            step = violation / curvature
            if gamma[i] < step:
                step = gamma[i]
            if box - gamma[j] < step:
                step = box - gamma[j]
            gamma[i] = max(gamma[i] - step, 0.0)
            gamma[j] = min(gamma[j] + step, box)
            row_j = K[j]
            row_i = K[i]
            gi = -np.inf
            gj = np.inf
            i = 0
            j = 0
            for a in range(n):
                ga = grad[a] + step * (row_j[a] - row_i[a])
                grad[a] = ga
                if gamma[a] > 0.0 and ga > gi:
                    gi = ga
                    i = a
                if gamma[a] < box and ga < gj:
                    gj = ga
                    j = a
        return 1, max_iter, best_violation

else:  # pragma: no cover
    _smo_core_jit = None


def _use_jit() -> bool:
    return _smo_core_jit is not None and not os.environ.get("MVCAL_NO_NUMBA")


def _smo(K, nu, tol, max_iter):
    """Most-violating-pair SMO on the dual; returns (gamma, iterations)."""
    n = K.shape[0]
    box = 1.0 / (nu * n)
    k0 = math.ceil(nu * n)
    gamma = np.zeros(n)
    gamma[:k0] = 1.0 / k0
    np.clip(gamma, 0.0, box, out=gamma)
    grad = K @ gamma
    core = _smo_core_jit if _use_jit() else _smo_core_numpy
    status, iterations, best_violation = core(K, gamma, grad, box, tol, int(max_iter))
    if status != 0:
        raise ConvergenceError(
            f"SMO did not reach KKT tolerance {tol} within {max_iter} iterations "
            f"(best violation {best_violation:.3e})",
            best_violation=float(best_violation),
            iterations=int(max_iter),
        )
    return gamma, int(iterations)


def _recover_rho(gamma, grad, box):
    """Offset per KKT: mean of f over unbounded SVs, else bound midpoint."""
    interior = (gamma > 0.0) & (gamma < box)
    if np.any(interior):
        return float(np.mean(grad[interior]))
    upper = grad[gamma >= box]
    lower = grad[gamma <= 0.0]
    return float((np.max(upper) + np.min(lower)) / 2.0)


def fit(X, config: OcsvmConfig, *, sq_dists=None) -> OcsvmModel:
    """Solve the dual on X and return the fitted model.

    ``sq_dists`` may carry a precomputed symmetric squared-distance matrix
    for X (it is bandwidth-independent, so pipelines sweeping sigma reuse
    it across fits).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("X must be a 2-D matrix")
    check_finite(X, "X")
    n = X.shape[0]
    if n < 2:
        raise ValidationError(f"fit requires n >= 2, got n={n}")
    if n * config.nu < 1.0:
        raise ValidationError(f"fit requires n * nu >= 1, got {n * config.nu:.3g}")
    if sq_dists is None:
        sq_dists = pairwise_sq_dists(X)
    K = sq_dists_to_kernel(sq_dists, config.sigma)
    gamma, iterations = _smo(K, config.nu, config.kkt_tolerance, config.max_iterations)
    grad = K @ gamma
    rho = _recover_rho(gamma, grad, 1.0 / (config.nu * n))
    support = np.flatnonzero(gamma > 0.0)
    return OcsvmModel(
        gamma=gamma,
        support_indices=support,
        support_vectors=X[support],
        sigma=config.sigma,
        nu=config.nu,
        rho_nu=rho,
        train_size=n,
        iterations=iterations,
    )


def uniform_model(X, sigma) -> OcsvmModel:
    """Uniform-weight model (every gamma_i = 1/n), the nu -> 1 boundary case.

    Its decision function is the plain kernel-smoothing score
    (1/n) sum_i k_sigma(x, x_i). rho_nu is the smallest KKT-consistent
    offset: the largest in-sample score.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValidationError("uniform_model requires a nonempty 2-D matrix")
    check_finite(X, "X")
    sigma = as_bandwidth(sigma)
    n = X.shape[0]
    gamma = np.full(n, 1.0 / n)
    K = sq_dists_to_kernel(pairwise_sq_dists(X), sigma)
    scores = K @ gamma
    return OcsvmModel(
        gamma=gamma,
        support_indices=np.arange(n),
        support_vectors=X,
        sigma=sigma,
        nu=1.0,
        rho_nu=float(np.max(scores)),
        train_size=n,
    )


def decision_function(model: OcsvmModel, x):
    """f(x) = sum over support vectors of gamma_i k_sigma(x, x_i).

    Accepts a single vector (returns a float) or a matrix of query rows
    (returns one score per row). Scores lie in (0, 1].
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    Q = x[None, :] if single else x
    if Q.ndim != 2:
        raise ValidationError("query must be a vector or a 2-D matrix")
    if Q.shape[1] != model.feature_dim:
        raise DimensionMismatchError(model.feature_dim, Q.shape[1], "decision_function")
    if Q.shape[0] == 0:
        return np.empty(0)
    scores = kernel_cross(Q, model.support_vectors, model.sigma) @ model.support_gamma
    return float(scores[0]) if single else scores


def outlier_and_sv_fractions(model: OcsvmModel, X_train):
    """Fractions of strict outliers (f - rho_nu < 0) and of support vectors.

    X_train must be the matrix the model was fitted on. When rho_nu > 0
    these bracket nu: outliers/n <= nu <= SV/n (within ties slack); for
    rho_nu <= 0 the bracketing property is not applicable.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    if len(model.gamma) != len(X_train):
        raise ValidationError(
            "outlier_and_sv_fractions requires the training matrix used in fit "
            f"(gamma has {len(model.gamma)} entries, X_train has {len(X_train)} rows)"
        )
    scores = decision_function(model, X_train)
    n = len(X_train)
    outlier_fraction = float(np.count_nonzero(scores - model.rho_nu < 0.0)) / n
    sv_fraction = float(np.count_nonzero(model.gamma > 0.0)) / n
    return outlier_fraction, sv_fraction


def dual_objective(gamma, K) -> float:
    """(1/2) gamma' K gamma."""
    gamma = np.asarray(gamma, dtype=np.float64)
    return 0.5 * float(gamma @ (K @ gamma))


def kkt_violations(gamma, K, nu, rho=None):
    """Standalone KKT verifier for a candidate dual point.

    Returns a dict with the offset used and the worst violation of each
    optimality condition (gamma_i = 0 needs f_i >= rho, interior needs
    f_i = rho, gamma_i at the box needs f_i <= rho), plus feasibility gaps.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    n = len(gamma)
    box = 1.0 / (nu * n)
    grad = K @ gamma
    if rho is None:
        rho = _recover_rho(gamma, grad, box)
    at_zero = gamma <= 0.0
    at_box = gamma >= box
    interior = ~at_zero & ~at_box
    lower = float(np.max(rho - grad[at_zero], initial=0.0))
    middle = float(np.max(np.abs(grad[interior] - rho), initial=0.0))
    upper = float(np.max(grad[at_box] - rho, initial=0.0))
    return {
        "rho": float(rho),
        "zero_gamma": lower,
        "interior": middle,
        "bound_gamma": upper,
        "max_violation": max(lower, middle, upper),
        "sum_gap": abs(float(np.sum(gamma)) - 1.0),
        "box_gap": max(float(np.max(gamma - box, initial=0.0)), float(np.max(-gamma, initial=0.0))),
    }
