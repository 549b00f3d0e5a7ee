"""Comparison methods: the plain nu = 1 - alpha OCSVM and the KDE plug-in."""

import math
from dataclasses import dataclass

import numpy as np

from . import ocsvm
from .calibration import calibrate_offset
from .errors import DimensionMismatchError, ValidationError
from .geometry import IndicatorSet
from .kernel import check_finite, pairwise_sq_dists

KDE_CV_GRID = tuple(np.linspace(0.1, 10.0, 15))
KDE_CV_FOLDS = 4


def standard_ocsvm_model(X, alpha, sigma, **solver_kwargs) -> ocsvm.OcsvmModel:
    """Fit on all of X with nu = 1 - alpha (the mass-at-least-alpha recipe)."""
    if not (0.0 < alpha < 1.0):
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    config = ocsvm.OcsvmConfig(nu=1.0 - alpha, sigma=sigma, **solver_kwargs)
    return ocsvm.fit(X, config)


def standard_ocsvm_set(X, alpha, sigma, **solver_kwargs) -> IndicatorSet:
    """Estimated set {f - rho_nu >= 0} of the plain OCSVM."""
    model = standard_ocsvm_model(X, alpha, sigma, **solver_kwargs)
    return ocsvm_model_set(model)


def ocsvm_model_set(model: ocsvm.OcsvmModel) -> IndicatorSet:
    return IndicatorSet(
        lambda Q: ocsvm.decision_function(model, Q) - model.rho_nu >= 0.0,
        name=f"ocsvm(nu={model.nu:.3g})",
        dim=model.feature_dim,
    )


@dataclass(frozen=True)
class KdeModel:
    """Gaussian KDE with one bandwidth in all directions, uniform weights."""

    samples: np.ndarray
    bandwidth: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise ValidationError("KDE needs a nonempty 2-D sample matrix")
        check_finite(samples, "samples")
        if not (self.bandwidth > 0):
            raise ValidationError(f"bandwidth must be positive, got {self.bandwidth!r}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


def kde_density(model: KdeModel, x):
    """(1/n) sum_i (2 pi s^2)^(-d/2) exp(-||x - x_i||^2 / (2 s^2))."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    Q = x[None, :] if single else x
    if Q.shape[1] != model.dim:
        raise DimensionMismatchError(model.dim, Q.shape[1], "kde_density")
    s = model.bandwidth
    d = model.dim
    norm = (2.0 * math.pi * s**2) ** (-d / 2.0)
    sq = pairwise_sq_dists(Q, model.samples)
    dens = norm * np.mean(np.exp(-sq / (2.0 * s**2)), axis=1)
    return float(dens[0]) if single else dens


def _cv_folds(n, folds, seed):
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def kde_bandwidth_cv(X, grid=KDE_CV_GRID, folds=KDE_CV_FOLDS, seed=0) -> float:
    """Bandwidth maximizing mean held-out log-likelihood over seeded folds.

    A candidate is rejected if any fold underflows to -inf. Ties break
    toward the larger bandwidth.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 * folds:
        raise ValidationError(f"cross validation needs at least {2 * folds} samples")
    assignments = _cv_folds(X.shape[0], folds, seed)
    best = None
    for s in grid:
        s = float(s)
        fold_lls = []
        for held_out in assignments:
            mask = np.ones(X.shape[0], dtype=bool)
            mask[held_out] = False
            dens = kde_density(KdeModel(samples=X[mask], bandwidth=s), X[held_out])
            with np.errstate(divide="ignore"):
                ll = float(np.mean(np.log(dens)))
            fold_lls.append(ll)
        score = float(np.mean(fold_lls))
        if not np.isfinite(score):
            continue
        if best is None or score > best[1] or (score == best[1] and s > best[0]):
            best = (s, score)
    if best is None:
        raise ValidationError("every candidate bandwidth underflowed in cross validation")
    return best[0]


def kde_plugin_set(X, alpha, bandwidth) -> IndicatorSet:
    """Threshold the KDE at the level whose in-sample mass is at least alpha.

    The level is the same order statistic as calibrate_offset, applied to
    the densities of the n data points, so plug-in sets nest in alpha
    exactly like the calibrated sets do.
    """
    X = np.asarray(X, dtype=np.float64)
    model = KdeModel(samples=X, bandwidth=bandwidth)
    tau = calibrate_offset(kde_density(model, X), alpha)
    out = IndicatorSet(
        lambda Q: kde_density(model, Q) >= tau,
        name=f"kde(s={model.bandwidth:.3g}, tau={tau:.3g})",
        dim=model.dim,
    )
    out.tau = tau
    out.model = model
    return out
