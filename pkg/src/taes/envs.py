"""Synthetic game and chat activities, and the rules that grade an episode emotionally."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Distribution, EmotionSpace

KINDS = ("game", "chat")


@dataclass(frozen=True)
class ActivitySpec:
    id: str
    kind: str = "game"
    skill_edge: float = 0.0
    volatility: float = 0.05
    mean_length: int = 40
    reward_on_success: float = 1.0

    def __post_init__(self):
        if not self.id:
            raise ValueError("activity id must be non-empty")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not -1 < self.skill_edge < 1:
            raise ValueError("skill_edge must lie in (-1, 1)")
        if self.volatility < 0:
            raise ValueError("volatility must be nonnegative")
        if int(self.mean_length) != self.mean_length or self.mean_length < 2:
            raise ValueError("mean_length must be an integer >= 2")
        if self.reward_on_success < 0:
            raise ValueError("reward_on_success must be nonnegative")

    @property
    def base_probability(self) -> float:
        return 0.5 + self.skill_edge / 2


@dataclass(frozen=True)
class EvaluatorConfig:
    challenge_threshold: float = 0.2
    boredom_floor: float = 0.7
    boredom_length_factor: float = 2.0
    satisfaction_trait: str = "S"
    challenge_trait: str = "C"
    boredom_trait: str = "B"

    def __post_init__(self):
        if not 0 < self.challenge_threshold < 0.5:
            raise ValueError("challenge_threshold must lie in (0, 0.5)")
        if not 0.5 < self.boredom_floor < 1:
            raise ValueError("boredom_floor must lie in (0.5, 1)")
        if not self.boredom_length_factor > 1:
            raise ValueError("boredom_length_factor must exceed 1")

    def check_space(self, space: EmotionSpace) -> None:
        for trait in (self.satisfaction_trait, self.challenge_trait, self.boredom_trait):
            if trait not in space:
                raise ValueError(f"evaluator trait {trait!r} missing from emotion space {space.traits}")


@dataclass(frozen=True)
class EpisodeRecord:
    activity: str
    win_prob_trajectory: tuple[float, ...]
    length: int
    success: bool  # won (game) or answered (chat)
    reward: float
    emotion_vector: Optional[Distribution] = field(default=None, compare=False)

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("episode length must be positive")
        if any(not 0.0 <= x <= 1.0 for x in self.win_prob_trajectory):
            raise ValueError("win probabilities must lie in [0, 1]")


def simulate_episode(spec: ActivitySpec, rng: np.random.Generator) -> EpisodeRecord:
    """Draw one synthetic episode.

    Lengths are geometric with mean ``mean_length``, clamped to >= 2. A game's
    win probability follows a Gaussian random walk clamped to [0, 1],
    starting at 0.5 + skill_edge/2; the game is won with the final value as
    probability. Chats are answered with probability 0.5 + skill_edge/2.
    """
    length = max(2, int(rng.geometric(1.0 / spec.mean_length)))
    p0 = spec.base_probability
    if spec.kind == "chat":
        success = bool(rng.random() < p0)
        trajectory: tuple[float, ...] = ()
    else:
        steps = rng.normal(0.0, spec.volatility, size=length - 1)
        traj = [p0]
        x = p0
        for s in steps:
            x = min(1.0, max(0.0, x + s))
            traj.append(x)
        trajectory = tuple(traj)
        success = bool(rng.random() < trajectory[-1])
    reward = spec.reward_on_success if success else 0.0
    return EpisodeRecord(spec.id, trajectory, length, success, reward)


def episode_flags(ep: EpisodeRecord, spec: ActivitySpec, config: EvaluatorConfig) -> list[str]:
    """Trait names raised by an episode (in S, C, B order, possibly empty)."""
    flags = []
    if spec.kind == "game" and not ep.win_prob_trajectory:
        raise ValueError(f"game episode of {ep.activity!r} has no win-probability trajectory")
    if ep.success:
        flags.append(config.satisfaction_trait)
    low = min(ep.win_prob_trajectory) if ep.win_prob_trajectory else None
    if low is not None and low < config.challenge_threshold:
        flags.append(config.challenge_trait)
    too_long = ep.length > config.boredom_length_factor * spec.mean_length
    if (low is not None and low >= config.boredom_floor) or too_long:
        flags.append(config.boredom_trait)
    return flags


def flags_to_vector(flags, space: EmotionSpace, fallback: str) -> Distribution:
    v = np.zeros(len(space))
    for trait in flags or [fallback]:
        v[space.index(trait)] = 1.0
    return Distribution(v / v.sum())


def evaluate_episode(
    ep: EpisodeRecord,
    spec: ActivitySpec,
    config: EvaluatorConfig,
    space: EmotionSpace,
) -> Distribution:
    """Spread unit mass uniformly over the raised flags; no flag means boredom."""
    config.check_space(space)
    return flags_to_vector(episode_flags(ep, spec, config), space, config.boredom_trait)
