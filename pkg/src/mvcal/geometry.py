"""Monte Carlo volumes, Mass-Volume curves and bandwidth selection.

Volumes are estimated by uniform sampling over the hypercube enclosing
the data. One shared sample is reused across the masses of a curve and
across bandwidth candidates within a selection run (common random
numbers keep the argmin stable). Volume-based metrics are only supported
up to dimension 10; uniform hypercube sampling is hopeless beyond that.
"""

import json
from dataclasses import dataclass

import numpy as np

from .calibration import MassGrid
from .errors import DegenerateDataError, DimensionMismatchError, ValidationError

MAX_VOLUME_DIM = 10


@dataclass(frozen=True)
class HyperRect:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValidationError("lower and upper must be equal-length vectors")
        if not np.all(lower < upper):
            bad = int(np.argmax(~(lower < upper)))
            raise DegenerateDataError(bad, "lower must be strictly below upper")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, obj) -> "HyperRect":
        return cls(lower=np.asarray(obj["lower"]), upper=np.asarray(obj["upper"]))


class IndicatorSet:
    """Deterministic membership oracle over batches of query rows."""

    def __init__(self, fn, name="set", dim=None):
        self._fn = fn
        self.name = str(name)
        self.dim = None if dim is None else int(dim)

    def contains(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValidationError("indicator queries must be a 2-D matrix")
        if self.dim is not None and X.shape[1] != self.dim:
            raise DimensionMismatchError(self.dim, X.shape[1], self.name)
        out = np.asarray(self._fn(X))
        if out.shape != (X.shape[0],):
            raise ValidationError(f"indicator '{self.name}' returned a malformed mask")
        return out.astype(bool)

    def __repr__(self):
        return f"IndicatorSet({self.name})"


def everything(dim=None) -> IndicatorSet:
    return IndicatorSet(lambda X: np.ones(len(X), dtype=bool), name="everything", dim=dim)


def nothing(dim=None) -> IndicatorSet:
    return IndicatorSet(lambda X: np.zeros(len(X), dtype=bool), name="nothing", dim=dim)


@dataclass(frozen=True)
class MassVolumeCurve:
    points: tuple  # ((beta, volume), ...) sorted by strictly increasing beta
    amv: float

    def __post_init__(self):
        pts = tuple((float(b), float(v)) for b, v in self.points)
        betas = [b for b, _ in pts]
        if len(pts) < 1:
            raise ValidationError("a curve needs at least one point")
        if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
            raise ValidationError("curve masses must be strictly increasing")
        if any(v < 0 for _, v in pts):
            raise ValidationError("volumes must be nonnegative")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "amv", float(self.amv))

    @property
    def betas(self):
        return np.array([b for b, _ in self.points])

    @property
    def volumes(self):
        return np.array([v for _, v in self.points])


def enclosing_hypercube(X, margin=0.0) -> HyperRect:
    """Per-coordinate bounding box, expanded by margin * range on each side."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValidationError("enclosing_hypercube requires a nonempty 2-D matrix")
    if margin < 0:
        raise ValidationError("margin must be >= 0")
    lower = X.min(axis=0)
    upper = X.max(axis=0)
    span = upper - lower
    if np.any(span == 0.0):
        raise DegenerateDataError(int(np.argmax(span == 0.0)), "coordinate has zero range")
    return HyperRect(lower=lower - margin * span, upper=upper + margin * span)


def uniform_sample(box: HyperRect, m, seed) -> np.ndarray:
    """m i.i.d. uniform points in the box; a pure function of (box, m, seed)."""
    if int(m) < 1:
        raise ValidationError("m must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.uniform(box.lower, box.upper, size=(int(m), box.dim))


def _check_volume_dim(box: HyperRect):
    if box.dim > MAX_VOLUME_DIM:
        raise ValidationError(
            f"volume estimation supports dimension <= {MAX_VOLUME_DIM}, got {box.dim}"
        )


def mc_volume(indicator: IndicatorSet, box: HyperRect, m, seed):
    """Monte Carlo volume of the set within the box.

    Returns (estimate, std_error): V * hits/m with the binomial standard
    error V * sqrt(p(1-p)/m).
    """
    _check_volume_dim(box)
    Z = uniform_sample(box, m, seed)
    p = float(np.mean(indicator.contains(Z)))
    volume = box.volume * p
    std_error = box.volume * float(np.sqrt(p * (1.0 - p) / int(m)))
    return volume, std_error


def symmetric_difference_volume(A: IndicatorSet, B: IndicatorSet, box: HyperRect, m, seed) -> float:
    """MC estimate of mu(A delta B) using one shared uniform sample."""
    _check_volume_dim(box)
    Z = uniform_sample(box, m, seed)
    inside_a = A.contains(Z)
    inside_b = B.contains(Z)
    return box.volume * float(np.mean(inside_a ^ inside_b))


def area_under_curve(betas, volumes) -> float:
    """Trapezoidal integral of volume over mass."""
    return float(np.trapezoid(np.asarray(volumes, dtype=np.float64), np.asarray(betas, dtype=np.float64)))


def mass_volume_curve(sets, box: HyperRect, m, seed) -> MassVolumeCurve:
    """Curve of (beta, estimated volume) over a map beta -> IndicatorSet.

    All betas share one uniform sample, coupling the per-beta estimates.
    """
    if len(sets) < 2:
        raise ValidationError("mass_volume_curve requires at least 2 masses")
    _check_volume_dim(box)
    Z = uniform_sample(box, m, seed)
    betas = sorted(float(b) for b in sets)
    points = []
    for beta in betas:
        p = float(np.mean(sets[beta].contains(Z)))
        points.append((beta, box.volume * p))
    amv = area_under_curve([b for b, _ in points], [v for _, v in points])
    return MassVolumeCurve(points=tuple(points), amv=amv)


def ensemble_mass_volume_curve(e, box: HyperRect, m, seed, *, sample=None) -> MassVolumeCurve:
    """Mass-Volume curve of an ensemble over its grid masses.

    Arithmetic-identical to mass_volume_curve over per-beta ensemble
    indicators, but scores each member against the shared sample once
    instead of once per beta. ``sample`` may carry a pre-drawn shared
    sample (used when several bandwidth candidates share one draw).
    """
    from .ensemble import aggregate_margins, member_offsets, member_scores

    _check_volume_dim(box)
    if len(e.grid.values) < 2:
        raise ValidationError("mass_volume_curve requires at least 2 masses")
    Z = uniform_sample(box, m, seed) if sample is None else np.asarray(sample, dtype=np.float64)
    scores = member_scores(e, Z)
    points = []
    for beta in e.grid.values:
        margins = aggregate_margins(scores, member_offsets(e, beta))
        p = float(np.mean(margins >= 0.0))
        points.append((float(beta), box.volume * p))
    amv = area_under_curve([b for b, _ in points], [v for _, v in points])
    return MassVolumeCurve(points=tuple(points), amv=amv)


def select_bandwidth(curves) -> float:
    """Bandwidth with minimal area under its curve; ties favor the larger."""
    if not curves:
        raise ValidationError("select_bandwidth needs at least one candidate")
    best = None
    for sigma in sorted(curves, key=float):
        sigma = float(sigma)
        amv = curves[sigma].amv
        if best is None or amv < best[1] or (amv == best[1] and sigma > best[0]):
            best = (sigma, amv)
    return best[0]


def export_curve(curve: MassVolumeCurve, csv_path, *, sigma, m, seed):
    """Write the curve as CSV (header beta,volume) plus a JSON sidecar."""
    lines = ["beta,volume"]
    for beta, volume in curve.points:
        lines.append(f"{beta!r},{volume!r}")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    sidecar = {"amv": curve.amv, "sigma": float(sigma), "m": int(m), "seed": int(seed)}
    sidecar_path = str(csv_path) + ".json"
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar_path
