"""Offset calibration on a held-out split.

The solver is run on the training part with a deliberately large nu so
the decision function resolves the distribution tail; the offset for each
target mass beta is then the exact order statistic of the test scores
that puts at least a beta fraction of the test split inside
{f >= offset}. The empirical mass of a step function makes numeric
bisection equivalent to this order statistic, so the exact form is used
(the bisection variant lives in the test oracles).
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import ocsvm
from .errors import ValidationError
from .kernel import as_bandwidth, check_finite

_SEED_LIMIT = 2**64


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ValidationError(f"train_fraction must lie in (0, 1), got {self.train_fraction!r}")
        if not (0 <= int(self.seed) < _SEED_LIMIT):
            raise ValidationError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "train_fraction", float(self.train_fraction))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class MassGrid:
    """Target masses beta_1 < ... < beta_N spanning [alpha - c, alpha + c]."""

    alpha: float = 0.95
    c: float = 0.04
    count: int = 10
    values: tuple = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not (self.c > 0.0):
            raise ValidationError("c must be positive")
        if int(self.count) < 1:
            raise ValidationError("count must be >= 1")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "count", int(self.count))
        if self.count == 1:
            values = np.array([self.alpha])
        else:
            values = np.linspace(self.alpha - self.c, self.alpha + self.c, self.count)
            if self.count % 2 == 1:
                values[self.count // 2] = self.alpha
        if values[0] <= 0.0 or values[-1] >= 1.0:
            raise ValidationError(
                f"mass grid [{values[0]:.4g}, {values[-1]:.4g}] must stay inside (0, 1)"
            )
        object.__setattr__(self, "values", tuple(float(v) for v in values))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "c": self.c, "count": self.count, "values": list(self.values)}

    @classmethod
    def from_dict(cls, obj) -> "MassGrid":
        return cls(alpha=float(obj["alpha"]), c=float(obj["c"]), count=int(obj["count"]))


@dataclass(frozen=True)
class CalibratedModel:
    model: ocsvm.OcsvmModel
    test_scores: np.ndarray  # sorted ascending
    offsets: dict  # beta -> calibrated offset, includes alpha
    split: SplitSpec
    grid: MassGrid
    diagnostics: tuple = ()

    def offset_for(self, beta) -> float:
        return self.offsets[resolve_beta(self.offsets, beta)]

    def to_dict(self) -> dict:
        out = self.model.to_dict()
        out["offsets"] = {repr(float(b)): float(r) for b, r in self.offsets.items()}
        out["split_seed"] = self.split.seed
        out["train_fraction"] = self.split.train_fraction
        out["grid"] = self.grid.to_dict()
        out["diagnostics"] = [dict(d) for d in self.diagnostics]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj) -> "CalibratedModel":
        return cls(
            model=ocsvm.OcsvmModel.from_dict(obj),
            test_scores=np.empty(0),
            offsets={float(b): float(r) for b, r in obj["offsets"].items()},
            split=SplitSpec(train_fraction=float(obj["train_fraction"]), seed=int(obj["split_seed"])),
            grid=MassGrid.from_dict(obj["grid"]),
            diagnostics=tuple(obj.get("diagnostics", [])),
        )

    @classmethod
    def from_json(cls, text: str) -> "CalibratedModel":
        return cls.from_dict(json.loads(text))


def resolve_beta(offsets, beta) -> float:
    """Match beta against calibrated keys (exact up to 1e-12 float fuzz)."""
    beta = float(beta)
    for key in offsets:
        if abs(key - beta) <= 1e-12:
            return key
    available = ", ".join(repr(k) for k in sorted(offsets))
    raise ValidationError(f"beta {beta!r} was not calibrated; available masses: {available}")


def split(X, spec: SplitSpec):
    """Seeded uniformly-random partition into (X_train, X_test)."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 5:
        raise ValidationError(f"split requires n >= 5, got n={n}")
    n_train = int(round(spec.train_fraction * n))
    if not (1 <= n_train <= n - 1):
        raise ValidationError(
            f"train_fraction {spec.train_fraction} leaves no test samples for n={n}"
        )
    perm = np.random.default_rng(spec.seed).permutation(n)
    return X[perm[:n_train]], X[perm[n_train:]]


def calibrate_offset(test_scores, beta) -> float:
    """Offset putting at least a beta fraction of the test scores inside.

    Returns the k-th smallest score with k = floor((1 - beta) n) + 1, so
    the empirical mass of {score >= offset} lies in [beta, beta + 1/n)
    whenever the scores are distinct (ties round the mass up).
    """
    scores = np.asarray(test_scores, dtype=np.float64)
    n = scores.size
    if n < 1:
        raise ValidationError("calibrate_offset requires at least one test score")
    if not (0.0 < beta < 1.0):
        raise ValidationError(f"beta must lie in (0, 1), got {beta!r}")
    # the 1e-9 nudge keeps floor exact when (1 - beta) * n is integral
    k = int(math.floor((1.0 - beta) * n + 1e-9)) + 1
    k = min(k, n)
    return float(np.partition(scores, k - 1)[k - 1])


def mass_at_or_above(scores, threshold) -> float:
    """Empirical mass of {score >= threshold}."""
    scores = np.asarray(scores, dtype=np.float64)
    return float(np.count_nonzero(scores >= threshold)) / scores.size


def _calibration_betas(grid: MassGrid):
    betas = list(grid.values)
    if not any(abs(b - grid.alpha) <= 1e-12 for b in betas):
        betas.append(grid.alpha)
    return sorted(betas)


def calibrate_from_split(
    X_train,
    X_test,
    nu,
    sigma,
    grid: MassGrid,
    spec: SplitSpec,
    *,
    kkt_tolerance=1e-6,
    max_iterations=10_000_000,
    sq_dists=None,
) -> CalibratedModel:
    """Fit on X_train, then calibrate offsets on X_test for every grid mass.

    The grid's alpha is always calibrated as well, even when the grid has
    an even count and alpha falls between grid points. If the training
    mass of the solver's own set exceeds alpha - c (too few outliers for
    the target mass range), a machine-readable diagnostic is attached and
    calibration proceeds.
    """
    sigma = as_bandwidth(sigma)
    X_test = np.asarray(X_test, dtype=np.float64)
    check_finite(X_test, "X_test")
    if X_test.shape[0] < 1:
        raise ValidationError("calibration requires a nonempty test split")
    config = ocsvm.OcsvmConfig(
        nu=nu, sigma=sigma, kkt_tolerance=kkt_tolerance, max_iterations=max_iterations
    )
    model = ocsvm.fit(X_train, config, sq_dists=sq_dists)

    diagnostics = []
    train_mass = mass_at_or_above(ocsvm.decision_function(model, X_train), model.rho_nu)
    limit = grid.alpha - grid.c
    if train_mass > limit:
        diagnostics.append(
            {
                "code": "insufficient_outlier_fraction",
                "train_mass": train_mass,
                "required_max": limit,
                "message": (
                    f"training mass {train_mass:.4f} of the solver's set exceeds "
                    f"alpha - c = {limit:.4f}; consider a larger nu"
                ),
            }
        )

    test_scores = np.sort(ocsvm.decision_function(model, X_test))
    offsets = {beta: calibrate_offset(test_scores, beta) for beta in _calibration_betas(grid)}
    return CalibratedModel(
        model=model,
        test_scores=test_scores,
        offsets=offsets,
        split=spec,
        grid=grid,
        diagnostics=tuple(diagnostics),
    )


def calibrate(X, nu, sigma, grid: MassGrid, spec: SplitSpec, **solver_kwargs) -> CalibratedModel:
    """Split X per spec, then run calibrate_from_split on the parts."""
    X = np.asarray(X, dtype=np.float64)
    check_finite(X, "X")
    X_train, X_test = split(X, spec)
    return calibrate_from_split(X_train, X_test, nu, sigma, grid, spec, **solver_kwargs)
