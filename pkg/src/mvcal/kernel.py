"""Gaussian kernel evaluation and pairwise kernel matrices.

Shared by the one-class SVM solver, model scoring and the KDE baseline.
Squared distances are computed directly from coordinate differences
(never expanded into dot products), in fixed-size row blocks so memory
stays bounded for the desk-scale data sizes this package targets.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, ValidationError

# Upper bound on float64 scratch cells per row block (block_rows * n_cols).
_BLOCK_BUDGET = 4_000_000


@dataclass(frozen=True)
class KernelBandwidth:
    """Width of the Gaussian kernel, in feature-space length units."""

    sigma: float

    def __post_init__(self):
        s = self.sigma
        if not np.isfinite(s) or s <= 0:
            raise ValidationError(f"kernel bandwidth must be a positive real, got {s!r}")
        object.__setattr__(self, "sigma", float(s))


def as_bandwidth(sigma) -> KernelBandwidth:
    """Coerce a float or KernelBandwidth into a validated KernelBandwidth."""
    if isinstance(sigma, KernelBandwidth):
        return sigma
    return KernelBandwidth(float(sigma))


def _as_matrix(X, name="X"):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"{name} must be a 2-D matrix, got ndim={X.ndim}")
    return X


def check_finite(X, name="X"):
    """Reject NaN or Inf entries."""
    if not np.all(np.isfinite(X)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return X


def pairwise_sq_dists(A, B=None):
    """Squared Euclidean distances between rows of A and rows of B.

    Computed directly from per-coordinate differences (never expanded into
    dot products), accumulating coordinates in index order. Entry (i, j)
    therefore runs the exact same float operations as entry (j, i), so with
    B omitted the matrix is symmetric to bitwise equality and its diagonal
    is exactly zero. Rows of A are processed in blocks to bound scratch
    memory; values do not depend on the block size.
    """
    A = _as_matrix(A, "A")
    B = A if B is None else _as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatchError(A.shape[1], B.shape[1], "pairwise distances")
    n_a, d = A.shape
    n_b = B.shape[0]
    out = np.zeros((n_a, n_b), dtype=np.float64)
    block = max(1, _BLOCK_BUDGET // max(1, n_b))
    for start in range(0, n_a, block):
        rows = slice(start, min(start + block, n_a))
        acc = out[rows]
        for k in range(d):
            diff = A[rows, k, None] - B[None, :, k]
            np.square(diff, out=diff)
            acc += diff
    return out


def gaussian_kernel(x, y, sigma) -> float:
    """exp(-||x - y||^2 / (2 sigma^2)) for two feature vectors."""
    sigma = as_bandwidth(sigma)
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise DimensionMismatchError(x.size, y.size, "gaussian_kernel")
    if x.size < 1:
        raise ValidationError("gaussian_kernel requires dimension >= 1")
    # same coordinate-order accumulation as pairwise_sq_dists, so matrix
    # entries match scalar calls bitwise
    sq = 0.0
    for k in range(x.size):
        diff = x[k] - y[k]
        sq += diff * diff
    return float(np.exp(-sq / (2.0 * sigma.sigma**2)))


def kernel_matrix(X, sigma):
    """Symmetric n x n Gaussian kernel matrix with unit diagonal.

    Entry (i, j) equals gaussian_kernel(X[i], X[j], sigma); symmetry is exact
    because each unordered pair is evaluated once.
    """
    sigma = as_bandwidth(sigma)
    X = _as_matrix(X)
    if X.shape[0] < 1:
        raise ValidationError("kernel_matrix requires n >= 1")
    sq = pairwise_sq_dists(X)
    return sq_dists_to_kernel(sq, sigma)


def kernel_cross(Q, X, sigma):
    """Kernel matrix between query rows Q and reference rows X."""
    sigma = as_bandwidth(sigma)
    sq = pairwise_sq_dists(_as_matrix(Q, "Q"), _as_matrix(X))
    return np.exp(-sq / (2.0 * sigma.sigma**2))


def sq_dists_to_kernel(sq_dists, sigma):
    """Map a squared-distance matrix to Gaussian kernel values."""
    sigma = as_bandwidth(sigma)
    return np.exp(-np.asarray(sq_dists, dtype=np.float64) / (2.0 * sigma.sigma**2))
