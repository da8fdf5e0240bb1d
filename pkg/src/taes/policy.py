"""Activity selection: exploration, emotional drive overrides, sampling from q."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Sequence

import numpy as np

from .core import (
    Character,
    Distribution,
    DimensionError,
    EmotionSpace,
    ExperienceModel,
    MixtureWeights,
    as_array,
    kl_divergence,
    model_matrix,
)

STOCHASTIC = "stochastic"
DRIVE_OVERRIDE = "drive_override"
EXPLORATION = "exploration"

UTILITY_MODES = ("off", "weighted", "as_emotion")


@dataclass(frozen=True)
class PolicyConfig:
    drive_threshold: float = 0.25
    peakedness_threshold: float = 0.5
    exploration_epsilon: float = 0.05
    min_plays_per_activity: int = 3
    utility_mode: str = "off"
    utility_lambda: float = 1.0
    window_length: int = 50
    utility_trait: str = "U"

    def __post_init__(self):
        if self.drive_threshold < 0:
            raise ValueError("drive_threshold must be nonnegative")
        if not 0 < self.peakedness_threshold <= 1:
            raise ValueError("peakedness_threshold must lie in (1/K, 1]")
        if not 0 <= self.exploration_epsilon < 1:
            raise ValueError("exploration_epsilon must lie in [0, 1)")
        if self.min_plays_per_activity < 0 or int(self.min_plays_per_activity) != self.min_plays_per_activity:
            raise ValueError("min_plays_per_activity must be a nonnegative integer")
        if self.utility_mode not in UTILITY_MODES:
            raise ValueError(f"utility_mode must be one of {UTILITY_MODES}")
        if self.utility_lambda < 0:
            raise ValueError("utility_lambda must be nonnegative")
        if self.window_length <= 0 or int(self.window_length) != self.window_length:
            raise ValueError("window_length must be a positive integer")

    def check_space(self, space: EmotionSpace) -> None:
        if self.peakedness_threshold <= 1.0 / len(space):
            raise ValueError(
                f"peakedness_threshold {self.peakedness_threshold} must exceed 1/K = {1 / len(space):.4g}"
            )
        if self.utility_mode == "as_emotion" and self.utility_trait not in space:
            raise ValueError(f"utility_mode 'as_emotion' needs trait {self.utility_trait!r} in the space")


@dataclass(frozen=True)
class DriveState:
    """Trailing emotion frequencies over the last ``window_length`` episodes.

    ``drive`` holds M_i = P_i - p_i(N_a). With an empty history the trailing
    frequencies are taken to be the character target, so every drive is zero.
    """

    window_length: int
    history: tuple[np.ndarray, ...]
    trailing: np.ndarray
    drive: np.ndarray

    @classmethod
    def initial(cls, character: Character, window_length: int = 50) -> "DriveState":
        if window_length <= 0:
            raise ValueError("window_length must be positive")
        t = character.target.values
        return cls(window_length, (), t, np.zeros_like(t))


def push_episode(state: DriveState, character: Character, emotion_vector) -> DriveState:
    v = np.array(as_array(emotion_vector), dtype=float)
    target = character.target.values
    if v.shape != target.shape:
        raise DimensionError("emotion vector does not match the character's space")
    v.setflags(write=False)
    history = (state.history + (v,))[-state.window_length:]
    trailing = np.mean(history, axis=0)
    trailing.setflags(write=False)
    drive = target - trailing
    drive.setflags(write=False)
    return DriveState(state.window_length, history, trailing, drive)


@dataclass(frozen=True)
class SelectionTrace:
    activity: int
    mechanism: str
    q: tuple[float, ...]
    drive: tuple[float, ...]
    rng_draws: int


def _drive_override(mat: np.ndarray, drive: np.ndarray, config: PolicyConfig):
    k = int(np.argmax(np.abs(drive)))
    if not abs(drive[k]) > config.drive_threshold:
        return None
    peaked = np.flatnonzero(mat.max(axis=1) >= config.peakedness_threshold)
    if peaked.size == 0:
        return None
    column = mat[peaked, k]
    pick = np.argmax(column) if drive[k] > 0 else np.argmin(column)
    return int(peaked[pick])


def select_activity(
    q: MixtureWeights,
    models: Sequence[ExperienceModel],
    state: DriveState,
    config: PolicyConfig,
    rng: np.random.Generator,
) -> SelectionTrace:
    """Pick the next activity.

    Precedence is exploration, then drive override, then sampling from q.
    Ties go to the lowest emotion and activity index.
    """
    if not models:
        raise ValueError("select_activity needs at least one activity")
    mat = model_matrix(models)
    weights = q.q
    if weights.size != mat.shape[0]:
        raise DimensionError("q and the experience models disagree on N")
    if state.drive.size != mat.shape[1]:
        raise DimensionError("drive state and experience models disagree on K")
    snapshot = (tuple(weights.tolist()), tuple(state.drive.tolist()))

    plays = np.array([m.observations for m in models])
    under = np.flatnonzero(plays < config.min_plays_per_activity)
    if under.size:
        a = int(under[rng.integers(under.size)])
        return SelectionTrace(a, EXPLORATION, *snapshot, 1)
    draws = 0
    if config.exploration_epsilon > 0:
        draws += 1
        if rng.random() < config.exploration_epsilon:
            a = int(rng.integers(mat.shape[0]))
            return SelectionTrace(a, EXPLORATION, *snapshot, draws + 1)

    a = _drive_override(mat, state.drive, config)
    if a is not None:
        return SelectionTrace(a, DRIVE_OVERRIDE, *snapshot, draws)

    return SelectionTrace(sample_index(weights, rng), STOCHASTIC, *snapshot, draws + 1)


def sample_index(weights: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw of one index from ``weights`` (one uniform)."""
    cdf = np.cumsum(weights)
    u = rng.random() * cdf[-1]
    return min(int(np.searchsorted(cdf, u, side="right")), weights.size - 1)


def utility_weight(character: Character, model: ExperienceModel, lam: float) -> float:
    """exp(-lam * D) with D the divergence of the activity from the character."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    d = kl_divergence(character.target, model.distribution)
    return float(np.exp(-lam * d))


def record_utility_emotion(
    raw_flags: Collection[str],
    reward_received: bool,
    space: EmotionSpace,
    utility_mode: str = "as_emotion",
    utility_trait: str = "U",
    fallback_trait: str = "B",
) -> Distribution:
    """Emotion vector with reward receipt counted as one more raised flag.

    ``raw_flags`` are the trait names raised by the episode evaluator. If
    nothing at all is raised, the mass goes to ``fallback_trait``.
    """
    if utility_mode != "as_emotion":
        raise ValueError(f"utility emotions need utility_mode 'as_emotion', got {utility_mode!r}")
    if utility_trait not in space:
        raise KeyError(f"utility trait {utility_trait!r} missing from {space.traits}")
    flags = set(raw_flags)
    if utility_trait in flags:
        raise ValueError("the evaluator must not raise the utility trait itself")
    if reward_received:
        flags.add(utility_trait)
    if not flags:
        flags = {fallback_trait}
    v = np.zeros(len(space))
    for trait in flags:
        v[space.index(trait)] = 1.0
    return Distribution(v / v.sum())
