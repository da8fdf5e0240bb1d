"""Emotion-space types, categorical distributions and KL divergence."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

EPS_FLOOR = 1e-9
NORM_TOL = 1e-9


class DimensionError(ValueError):
    pass


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def as_array(x) -> np.ndarray:
    """Return the probability vector behind a Distribution or array-like."""
    if isinstance(x, Distribution):
        return x.values
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class EmotionSpace:
    traits: tuple[str, ...]

    def __init__(self, traits: Iterable[str]):
        traits = tuple(traits)
        if len(traits) < 2:
            raise ValueError("an emotion space needs at least two traits")
        if any(not isinstance(t, str) or not t for t in traits):
            raise ValueError("trait identifiers must be non-empty strings")
        if len(set(traits)) != len(traits):
            raise ValueError(f"duplicate trait identifiers in {traits}")
        object.__setattr__(self, "traits", traits)

    def __len__(self) -> int:
        return len(self.traits)

    def index(self, trait: str) -> int:
        try:
            return self.traits.index(trait)
        except ValueError:
            raise KeyError(f"trait {trait!r} not in {self.traits}") from None

    def __contains__(self, trait: str) -> bool:
        return trait in self.traits

    def one_hot(self, trait: str) -> "Distribution":
        v = np.zeros(len(self))
        v[self.index(trait)] = 1.0
        return Distribution(v)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Categorical distribution over the traits of an emotion space.

    ``strict=True`` additionally demands every component >= EPS_FLOOR.
    """

    values: np.ndarray
    strict: bool = False

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("distribution must be a non-empty vector")
        low = v.min()
        if not np.isfinite(v.sum()):
            raise ValueError("distribution has non-finite components")
        if low < 0:
            raise ValueError(f"negative probability in {v}")
        if abs(v.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"components sum to {v.sum()!r}, not 1")
        if self.strict and low < EPS_FLOOR:
            raise ValueError(f"strict distribution has component below {EPS_FLOOR}")
        object.__setattr__(self, "values", v)

    @classmethod
    def normalized(cls, weights, strict: bool = False) -> "Distribution":
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not total > 0:
            raise ValueError("cannot normalize a vector with non-positive mass")
        return cls(w / total, strict=strict)

    @classmethod
    def uniform(cls, k: int) -> "Distribution":
        return cls(np.full(k, 1.0 / k), strict=True)

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def is_strict(self) -> bool:
        return bool(np.all(self.values >= EPS_FLOOR))

    def tolist(self) -> list[float]:
        return self.values.tolist()


@dataclass(frozen=True)
class Character:
    """Target frequencies of the emotion traits; every target is > 0."""

    space: EmotionSpace
    target: Distribution

    def __post_init__(self):
        if len(self.target) != len(self.space):
            raise DimensionError("character target does not match its emotion space")
        if not self.target.is_strict():
            raise ValueError("character targets must all be strictly positive")
        # renormalize so drives sum to zero to machine precision
        t = self.target.values
        object.__setattr__(self, "target", Distribution(t / t.sum(), strict=True))

    @classmethod
    def from_mapping(cls, space: EmotionSpace, targets: dict[str, float]) -> "Character":
        missing = set(space.traits) - set(targets)
        extra = set(targets) - set(space.traits)
        if missing or extra:
            raise ValueError(f"character traits mismatch: missing {sorted(missing)}, unknown {sorted(extra)}")
        return cls(space, Distribution([targets[t] for t in space.traits], strict=True))


@dataclass(frozen=True)
class ExperienceModel:
    """Smoothed per-activity emotion statistics.

    ``counts`` accumulate (possibly fractional) emotion vectors; the derived
    distribution adds ``prior_weight`` pseudo-observations to every trait.
    ``observations`` is the number of episodes absorbed so far.
    """

    space: EmotionSpace
    activity: str
    counts: np.ndarray = None
    prior_weight: float = 1.0
    observations: int = 0

    def __post_init__(self):
        counts = np.zeros(len(self.space)) if self.counts is None else self.counts
        counts = _frozen(counts)
        if counts.shape != (len(self.space),):
            raise DimensionError("counts do not match the emotion space")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if self.prior_weight < 0:
            raise ValueError("prior_weight must be nonnegative")
        object.__setattr__(self, "counts", counts)
        total = counts.sum() + len(self.space) * self.prior_weight
        if total > 0:
            probs = _frozen((counts + self.prior_weight) / total)
        else:
            probs = None
        object.__setattr__(self, "_probs", probs)

    @property
    def distribution(self) -> Distribution:
        return Distribution(self.probabilities())

    def probabilities(self) -> np.ndarray:
        """Derived (smoothed) distribution as a read-only array."""
        if self._probs is None:
            raise ValueError(f"no observations and no prior for activity {self.activity!r}")
        return self._probs


def kl_divergence(p, r) -> float:
    """KL divergence D(p || r) in nats; ``r`` must be strictly positive."""
    p = as_array(p)
    r = as_array(r)
    if p.shape != r.shape:
        raise DimensionError(f"dimension mismatch: {p.shape} vs {r.shape}")
    if np.any(r < EPS_FLOOR):
        raise ValueError("second argument must be a strict distribution")
    mask = p > 0
    terms = p[mask] * np.log(p[mask] / r[mask])
    return max(float(terms.sum()), 0.0)


def total_variation(p, r) -> float:
    p = as_array(p)
    r = as_array(r)
    if p.shape != r.shape:
        raise DimensionError(f"dimension mismatch: {p.shape} vs {r.shape}")
    return 0.5 * float(np.abs(p - r).sum())


def model_matrix(models: Sequence[ExperienceModel]) -> np.ndarray:
    """Stack derived distributions into an (N activities, K traits) array."""
    if not models:
        raise ValueError("at least one experience model is required")
    space = models[0].space
    if any(m.space != space for m in models):
        raise DimensionError("experience models live in different emotion spaces")
    return np.vstack([m.probabilities() for m in models])


def mixture_experience(q, models: Sequence[ExperienceModel]) -> Distribution:
    """Overall experience: the q-weighted mixture of per-activity distributions."""
    q = as_array(q.q if isinstance(q, MixtureWeights) else q)
    mat = model_matrix(models)
    if q.shape != (mat.shape[0],):
        raise DimensionError(f"{q.size} weights for {mat.shape[0]} activities")
    mix = q @ mat
    return Distribution(mix / mix.sum())


def update_experience(model: ExperienceModel, emotion_vector) -> ExperienceModel:
    v = as_array(emotion_vector)
    if v.shape != model.counts.shape:
        raise DimensionError("emotion vector does not match the model's space")
    if np.any(v < 0):
        raise ValueError("emotion vector has negative components")
    if abs(v.sum() - 1.0) > NORM_TOL:
        raise ValueError("emotion vector must sum to 1")
    return ExperienceModel(
        model.space,
        model.activity,
        model.counts + v,
        model.prior_weight,
        model.observations + 1,
    )


@dataclass(frozen=True, eq=False)
class MixtureWeights:
    """Selection probabilities over activities (a point on the simplex)."""

    q: np.ndarray = field()

    def __post_init__(self):
        q = _frozen(self.q)
        if q.ndim != 1 or q.size == 0:
            raise ValueError("mixture weights must be a non-empty vector")
        if np.any(q < 0) or abs(q.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"mixture weights {q} are not on the simplex")
        object.__setattr__(self, "q", q)

    @classmethod
    def uniform(cls, n: int) -> "MixtureWeights":
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.q.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, MixtureWeights):
            return NotImplemented
        return np.array_equal(self.q, other.q)

    def __hash__(self):
        return hash(self.q.tobytes())
