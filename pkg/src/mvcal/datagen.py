"""Synthetic generators, ground-truth level sets and dataset utilities."""

import csv
import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .calibration import calibrate_offset
from .errors import DegenerateDataError, DimensionMismatchError, ValidationError
from .geometry import HyperRect, IndicatorSet


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: tuple
    stddev: float = 1.0  # covariance is stddev^2 * identity

    def __post_init__(self):
        if self.weight <= 0:
            raise ValidationError("component weights must be positive")
        if self.stddev <= 0:
            raise ValidationError("component stddev must be positive")
        mean = tuple(float(v) for v in np.atleast_1d(self.mean))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "stddev", float(self.stddev))


@dataclass(frozen=True)
class UniformComponent:
    weight: float
    box: HyperRect

    def __post_init__(self):
        if self.weight <= 0:
            raise ValidationError("component weights must be positive")
        object.__setattr__(self, "weight", float(self.weight))


@dataclass(frozen=True)
class MixtureSpec:
    gaussians: tuple
    uniform: UniformComponent = None

    def __post_init__(self):
        gaussians = tuple(self.gaussians)
        if not gaussians and self.uniform is None:
            raise ValidationError("a mixture needs at least one component")
        dims = {len(g.mean) for g in gaussians}
        if self.uniform is not None:
            dims.add(self.uniform.box.dim)
        if len(dims) != 1:
            raise ValidationError(f"components disagree on dimension: {sorted(dims)}")
        total = sum(g.weight for g in gaussians)
        if self.uniform is not None:
            total += self.uniform.weight
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"component weights must sum to 1, got {total!r}")
        object.__setattr__(self, "gaussians", gaussians)

    @property
    def dim(self) -> int:
        if self.gaussians:
            return len(self.gaussians[0].mean)
        return self.uniform.box.dim

    @property
    def weights(self) -> np.ndarray:
        w = [g.weight for g in self.gaussians]
        if self.uniform is not None:
            w.append(self.uniform.weight)
        return np.array(w)

    def to_dict(self) -> dict:
        out = {"components": []}
        for g in self.gaussians:
            comp = {"weight": g.weight, "mean": list(g.mean)}
            if g.stddev != 1.0:
                comp["stddev"] = g.stddev
            out["components"].append(comp)
        if self.uniform is not None:
            out["uniform"] = {
                "weight": self.uniform.weight,
                "lower": self.uniform.box.lower.tolist(),
                "upper": self.uniform.box.upper.tolist(),
            }
        return out

    @classmethod
    def from_dict(cls, obj) -> "MixtureSpec":
        gaussians = tuple(
            GaussianComponent(
                weight=float(c["weight"]),
                mean=c["mean"],
                stddev=float(c.get("stddev", 1.0)),
            )
            for c in obj.get("components", ())
        )
        uniform = None
        if obj.get("uniform") is not None:
            u = obj["uniform"]
            uniform = UniformComponent(
                weight=float(u["weight"]),
                box=HyperRect(lower=np.asarray(u["lower"]), upper=np.asarray(u["upper"])),
            )
        return cls(gaussians=gaussians, uniform=uniform)

    @classmethod
    def from_json(cls, text: str) -> "MixtureSpec":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def bimodal_spec(d=2) -> MixtureSpec:
    """Two equal Gaussians at 2.5 and 7.5 on every coordinate."""
    return MixtureSpec(
        gaussians=(
            GaussianComponent(0.5, (2.5,) * d),
            GaussianComponent(0.5, (7.5,) * d),
        )
    )


def contaminated_bimodal_spec() -> MixtureSpec:
    """The bimodal pair at weight 0.475 each plus 5% uniform background."""
    box = HyperRect(lower=np.array([-2.0, -2.0]), upper=np.array([12.0, 12.0]))
    return MixtureSpec(
        gaussians=(
            GaussianComponent(0.475, (2.5, 2.5)),
            GaussianComponent(0.475, (7.5, 7.5)),
        ),
        uniform=UniformComponent(0.05, box),
    )


def sample_mixture(spec: MixtureSpec, n, seed) -> np.ndarray:
    """n i.i.d. draws: pick a component by weight, then draw from it."""
    if int(n) < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    k = len(spec.gaussians) + (1 if spec.uniform is not None else 0)
    idx = rng.choice(k, size=int(n), p=spec.weights)
    X = np.empty((int(n), spec.dim))
    for c, comp in enumerate(spec.gaussians):
        mask = idx == c
        X[mask] = rng.normal(comp.mean, comp.stddev, size=(int(mask.sum()), spec.dim))
    if spec.uniform is not None:
        mask = idx == k - 1
        X[mask] = rng.uniform(
            spec.uniform.box.lower, spec.uniform.box.upper, size=(int(mask.sum()), spec.dim)
        )
    return X


def mixture_density(spec: MixtureSpec, x):
    """Density of the mixture at a point or at each row of a matrix."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    Q = x[None, :] if single else x
    if Q.shape[1] != spec.dim:
        raise DimensionMismatchError(spec.dim, Q.shape[1], "mixture_density")
    d = spec.dim
    out = np.zeros(Q.shape[0])
    for comp in spec.gaussians:
        sq = np.sum((Q - np.asarray(comp.mean)) ** 2, axis=1)
        norm = (2.0 * math.pi * comp.stddev**2) ** (-d / 2.0)
        out += comp.weight * norm * np.exp(-sq / (2.0 * comp.stddev**2))
    if spec.uniform is not None:
        box = spec.uniform.box
        inside = np.all((Q >= box.lower) & (Q <= box.upper), axis=1)
        out += spec.uniform.weight / box.volume * inside
    return float(out[0]) if single else out


@dataclass(frozen=True)
class GroundTruthSet:
    """The level set {h >= tau} of a known mixture density."""

    spec: MixtureSpec
    tau: float

    def __post_init__(self):
        if not (self.tau > 0):
            raise ValidationError(f"level tau must be positive, got {self.tau!r}")

    def indicator(self) -> IndicatorSet:
        return IndicatorSet(
            lambda X: mixture_density(self.spec, X) >= self.tau,
            name=f"truth(tau={self.tau:.4g})",
            dim=self.spec.dim,
        )


def true_mv_level(spec: MixtureSpec, alpha, m_quantile=1_000_000, seed=0) -> GroundTruthSet:
    """Level whose set holds mass alpha, from an empirical density quantile.

    Draws m_quantile points, evaluates the density at each and takes the
    (1 - alpha) empirical quantile with the same order-statistic rule as
    calibrate_offset.
    """
    if not (0.0 < alpha < 1.0):
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    sample = sample_mixture(spec, m_quantile, seed)
    tau = calibrate_offset(mixture_density(spec, sample), alpha)
    return GroundTruthSet(spec=spec, tau=tau)


def two_moons(n, noise=0.1, seed=0) -> np.ndarray:
    """Two interleaving unit half-circles with isotropic Gaussian noise.

    The first ceil(n/2) rows come from the upper arc, the rest from the
    reflected arc shifted by (1, -0.5); arc angles are uniform draws.
    """
    if int(n) < 1:
        raise ValidationError("n must be >= 1")
    n = int(n)
    rng = np.random.default_rng(seed)
    n_upper = n - n // 2
    t_upper = rng.uniform(0.0, math.pi, size=n_upper)
    t_lower = rng.uniform(0.0, math.pi, size=n - n_upper)
    upper = np.column_stack([np.cos(t_upper), np.sin(t_upper)])
    lower = np.column_stack([1.0 - np.cos(t_lower), 0.5 - np.sin(t_lower)])
    X = np.concatenate([upper, lower])
    if noise < 0:
        raise ValidationError("noise must be >= 0")
    if noise > 0:
        X = X + rng.normal(scale=noise, size=X.shape)
    return X


def standardize(X):
    """Center each column and scale to unit (population) variance.

    Returns (X_std, means, scales); X = X_std * scales + means.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("standardize requires a 2-D matrix")
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    zero = np.flatnonzero(scales == 0.0)
    if zero.size:
        raise DegenerateDataError(int(zero[0]), "column has zero variance")
    return (X - means) / scales, means, scales


BOSTON_COLUMNS = (
    "CRIM", "ZN", "INDUS", "CHAS", "NOX", "RM", "AGE",
    "DIS", "RAD", "TAX", "PTRATIO", "B", "LSTAT", "MEDV",
)


def load_boston():
    """The vendored Boston housing table (506 x 14) and its column names.

    Columns: CRIM (crime rate), ZN (large-lot zoning %), INDUS
    (non-retail business acres %), CHAS (Charles River indicator), NOX
    (NOx concentration), RM (average rooms per dwelling), AGE (pre-1940
    units %), DIS (distance to employment centres), RAD (highway access
    index), TAX (property-tax rate), PTRATIO (pupil-teacher ratio),
    B (1000(Bk - 0.63)^2), LSTAT (lower-status population %), MEDV
    (median home value, the regression target).
    """
    path = resources.files("mvcal").joinpath("data/boston_housing.csv")
    with path.open("r", encoding="utf-8") as fh:
        names, X = _read_csv_handle(fh)
    if tuple(names) != BOSTON_COLUMNS or X.shape != (506, 14):
        raise ValidationError("vendored Boston table is corrupted")
    return X, BOSTON_COLUMNS


def boston_rooms_lstat() -> np.ndarray:
    """The two Boston features used for 2-D runs: RM and LSTAT."""
    X, names = load_boston()
    return X[:, [names.index("RM"), names.index("LSTAT")]]


def write_samples_csv(X, path, columns=None):
    """Write samples as CSV: header row, one sample per line."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("samples must form a 2-D matrix")
    if columns is None:
        columns = [f"x{k + 1}" for k in range(X.shape[1])]
    if len(columns) != X.shape[1]:
        raise ValidationError("column names must match the feature count")
    lines = [",".join(columns)]
    for row in X:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_csv_handle(fh):
    reader = csv.reader(fh)
    try:
        names = next(reader)
    except StopIteration:
        raise ValidationError("CSV file is empty") from None
    rows = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(names):
            raise ValidationError(f"CSV row {len(rows) + 2} has {len(row)} fields, expected {len(names)}")
        rows.append([float(v) for v in row])
    X = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(names)))
    return [c.strip() for c in names], X


def read_samples_csv(path):
    """Read a samples CSV (header row with feature names) -> (names, X)."""
    with open(path, "r", encoding="utf-8") as fh:
        return _read_csv_handle(fh)
