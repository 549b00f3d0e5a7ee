"""Aggregation of calibrated models over independent train/test splits.

The ensemble decision at mass beta averages the member margins,
score(x) = (1/B) sum_b (f_b(x) - offset_b); a point belongs to the
estimated set when the score is >= 0. Summation always runs in member
index order so results are bitwise reproducible and independent of how
members were assembled.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import ocsvm
from .calibration import CalibratedModel, MassGrid, SplitSpec, calibrate, resolve_beta
from .errors import ValidationError
from .geometry import IndicatorSet


@dataclass(frozen=True)
class Ensemble:
    members: tuple
    grid: MassGrid

    def __post_init__(self):
        if len(self.members) < 1:
            raise ValidationError("an ensemble needs at least one member")
        object.__setattr__(self, "members", tuple(self.members))
        first = self.members[0].model
        for m in self.members:
            if m.model.sigma != first.sigma or m.model.nu != first.nu or m.grid != self.grid:
                raise ValidationError("ensemble members must share sigma, nu and the mass grid")

    @property
    def B(self) -> int:
        return len(self.members)

    @property
    def sigma(self):
        return self.members[0].model.sigma

    @property
    def nu(self) -> float:
        return self.members[0].model.nu

    @property
    def feature_dim(self) -> int:
        return self.members[0].model.feature_dim

    def to_dict(self) -> dict:
        return {
            "members": [m.to_dict() for m in self.members],
            "B": self.B,
            "grid": self.grid.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj) -> "Ensemble":
        members = tuple(CalibratedModel.from_dict(m) for m in obj["members"])
        return cls(members=members, grid=MassGrid.from_dict(obj["grid"]))

    @classmethod
    def from_json(cls, text: str) -> "Ensemble":
        return cls.from_dict(json.loads(text))


def build_ensemble(
    X, nu, sigma, grid: MassGrid, B, base_seed, *, train_fraction=0.8, **solver_kwargs
) -> Ensemble:
    """Calibrate B models on splits seeded base_seed .. base_seed + B - 1."""
    if int(B) < 1:
        raise ValidationError("B must be >= 1")
    members = []
    for b in range(int(B)):
        spec = SplitSpec(train_fraction=train_fraction, seed=int(base_seed) + b)
        members.append(calibrate(X, nu, sigma, grid, spec, **solver_kwargs))
    return Ensemble(members=tuple(members), grid=grid)


def member_scores(e: Ensemble, X) -> np.ndarray:
    """Matrix of member decision-function values, one row per member."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("X must be a 2-D matrix of query rows")
    out = np.empty((e.B, X.shape[0]))
    for b, member in enumerate(e.members):
        out[b] = ocsvm.decision_function(member.model, X) if X.shape[0] else ()
    return out


def member_offsets(e: Ensemble, beta) -> np.ndarray:
    return np.array([m.offset_for(beta) for m in e.members])


def aggregate_margins(scores, offsets) -> np.ndarray:
    """(1/B) sum_b (scores[b] - offsets[b]), accumulated in member order."""
    scores = np.asarray(scores, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    acc = np.zeros(scores.shape[1])
    for b in range(scores.shape[0]):
        acc += scores[b] - offsets[b]
    return acc / scores.shape[0]


def ensemble_scores(e: Ensemble, beta, X) -> np.ndarray:
    """Aggregated margin at mass beta for every query row."""
    offs = member_offsets(e, beta)
    return aggregate_margins(member_scores(e, X), offs)


def ensemble_score(e: Ensemble, beta, x) -> float:
    """Aggregated margin at mass beta for a single point."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("x must be a single feature vector")
    return float(ensemble_scores(e, beta, x[None, :])[0])


def membership(e: Ensemble, beta, X_query) -> np.ndarray:
    """Boolean vector: aggregated margin >= 0 per query row."""
    X_query = np.asarray(X_query, dtype=np.float64)
    if X_query.ndim != 2:
        if X_query.size == 0:
            X_query = X_query.reshape(0, e.feature_dim)
        else:
            raise ValidationError("X_query must be a 2-D matrix of query rows")
    if X_query.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return ensemble_scores(e, beta, X_query) >= 0.0


def indicator(e: Ensemble, beta) -> IndicatorSet:
    """Membership oracle for the estimated set at mass beta."""
    key = resolve_beta(e.members[0].offsets, beta)
    return IndicatorSet(
        lambda X: membership(e, key, X),
        name=f"ensemble(beta={key!r})",
        dim=e.feature_dim,
    )
