"""Experiment runner for the select -> simulate -> evaluate -> update -> re-optimize loop."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .core import (
    Character,
    Distribution,
    EmotionSpace,
    ExperienceModel,
    MixtureWeights,
    kl_divergence,
    model_matrix,
    total_variation,
    update_experience,
)
from .envs import ActivitySpec, EvaluatorConfig, episode_flags, flags_to_vector, simulate_episode
from .optimizer import SolverConfig, objective, optimize_weights
from .policy import (
    DriveState,
    PolicyConfig,
    push_episode,
    record_utility_emotion,
    select_activity,
    utility_weight,
)

OUT_DIR_ENV = "TAES_OUT_DIR"
FEASIBLE_OBJECTIVE = 1e-6
# keeps warm starts off the simplex boundary so underflowed weights can recover
WARM_START_MIX = 1e-12


class ConfigError(ValueError):
    pass


class InvariantError(AssertionError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    character: Character
    activities: tuple[ActivitySpec, ...]
    evaluator: EvaluatorConfig = EvaluatorConfig()
    policy: PolicyConfig = PolicyConfig()
    solver: SolverConfig = SolverConfig()
    horizon: int = 1000
    reoptimize_every: int = 1
    seed: int = 0
    prior_weight: float = 1.0
    tail_fraction: float = 0.1
    output_dir: Optional[str] = None
    timeline_name: str = "timeline.csv"
    summary_name: str = "summary.json"

    def __post_init__(self):
        space = self.space
        if not self.activities:
            raise ConfigError("at least one activity is required")
        ids = [a.id for a in self.activities]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate activity ids: {ids}")
        if int(self.horizon) != self.horizon or self.horizon <= 0:
            raise ConfigError("horizon must be a positive integer")
        if int(self.reoptimize_every) != self.reoptimize_every or self.reoptimize_every <= 0:
            raise ConfigError("reoptimize_every must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not self.prior_weight > 0:
            raise ConfigError("prior_weight must be positive")
        if not 0 < self.tail_fraction <= 1:
            raise ConfigError("tail_fraction must lie in (0, 1]")
        try:
            self.evaluator.check_space(space)
            self.policy.check_space(space)
        except (ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def space(self) -> EmotionSpace:
        return self.character.space

    def replace(self, **changes) -> "ExperimentConfig":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return ExperimentConfig(**fields)


def _section(raw: dict, key: str, cls):
    data = raw.get(key, {})
    if not isinstance(data, dict):
        raise ConfigError(f"{key!r} must be an object")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"bad {key!r} section: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad {key!r} section: {exc}") from exc


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from the JSON document layout.

    Keys: ``traits``, ``character`` (trait -> target), ``activities``,
    ``evaluator``, ``policy``, ``solver``, ``horizon``, ``reoptimize_every``,
    ``seed``, ``prior_weight``, ``tail_fraction`` and ``output``
    (``dir``, ``timeline``, ``summary``).
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {
        "traits", "character", "activities", "evaluator", "policy", "solver",
        "horizon", "reoptimize_every", "seed", "prior_weight", "tail_fraction",
        "output", "description",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        space = EmotionSpace(raw["traits"])
        targets = raw["character"]
        if isinstance(targets, list):
            targets = dict(zip(space.traits, targets)) if len(targets) == len(space) else None
        if not isinstance(targets, dict):
            raise ConfigError("character must map every trait to its target frequency")
        character = Character.from_mapping(space, targets)
        activities = tuple(ActivitySpec(**a) for a in raw["activities"])
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    output = raw.get("output", {})
    kwargs: dict[str, Any] = dict(
        character=character,
        activities=activities,
        evaluator=_section(raw, "evaluator", EvaluatorConfig),
        policy=_section(raw, "policy", PolicyConfig),
        solver=_section(raw, "solver", SolverConfig),
        output_dir=output.get("dir"),
        timeline_name=output.get("timeline", "timeline.csv"),
        summary_name=output.get("summary", "summary.json"),
    )
    for key in ("horizon", "reoptimize_every", "seed", "prior_weight", "tail_fraction"):
        if key in raw:
            kwargs[key] = raw[key]
    if "horizon" not in raw:
        raise ConfigError("missing config key 'horizon'")
    for key in ("horizon", "reoptimize_every", "seed"):
        if key in kwargs and (isinstance(kwargs[key], bool) or not isinstance(kwargs[key], int)):
            raise ConfigError(f"{key!r} must be an integer")
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    """Read a JSON experiment config; I/O failures surface as OSError."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw)


def make_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (policy, environment) PCG64 streams spawned from one seed."""
    policy_seq, env_seq = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.Generator(np.random.PCG64(policy_seq)), np.random.Generator(np.random.PCG64(env_seq))


def episode_emotion(ep, spec: ActivitySpec, config: ExperimentConfig) -> Distribution:
    flags = episode_flags(ep, spec, config.evaluator)
    if config.policy.utility_mode == "as_emotion":
        return record_utility_emotion(
            flags,
            ep.reward > 0,
            config.space,
            utility_trait=config.policy.utility_trait,
            fallback_trait=config.evaluator.boredom_trait,
        )
    return flags_to_vector(flags, config.space, config.evaluator.boredom_trait)


def estimate_latent(spec: ActivitySpec, config: ExperimentConfig, n_episodes: int = 10000, seed: int = 0) -> np.ndarray:
    """Empirical emotion distribution of one activity over simulated episodes."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    total = np.zeros(len(config.space))
    for _ in range(n_episodes):
        total += episode_emotion(simulate_episode(spec, rng), spec, config).values
    return total / n_episodes


def latent_models(config: ExperimentConfig, n_episodes: int = 10000, seed: int = 0) -> list[ExperienceModel]:
    """Experience models filled with ``n_episodes`` simulated episodes per activity."""
    models = []
    for i, spec in enumerate(config.activities):
        p = estimate_latent(spec, config, n_episodes, seed + i)
        models.append(ExperienceModel(config.space, spec.id, p * n_episodes, config.prior_weight, n_episodes))
    return models


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    min_objective: float
    q_star: MixtureWeights

    def to_dict(self) -> dict:
        return {"feasible": self.feasible, "min_objective": self.min_objective, "q_star": self.q_star.q.tolist()}


def feasibility_report(
    character: Character,
    models: Sequence[ExperienceModel],
    config: SolverConfig = SolverConfig(),
) -> FeasibilityReport:
    """Is the character inside the convex hull of the activity distributions?"""
    res = optimize_weights(character, models, config)
    return FeasibilityReport(res.objective <= FEASIBLE_OBJECTIVE, res.objective, res.q_star)


@dataclass
class RunSummary:
    final_q: list[float]
    final_trailing: list[float]
    final_objective: float
    final_tv: float
    play_counts: dict[str, int]
    credits_raw: float
    credits_weighted: float
    wall_seconds: float
    tail_steps: int = 0
    tv_tail_mean: float = math.nan
    kl_tail_mean: Optional[float] = None
    kl_tail_infinite_steps: int = 0
    mechanism_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def timeline_header(config: ExperimentConfig) -> list[str]:
    traits = config.space.traits
    return (
        ["step", "activity_id", "mechanism"]
        + [f"emotion_{t}" for t in traits]
        + [f"trailing_{t}" for t in traits]
        + [f"q_{a.id}" for a in config.activities]
        + ["objective_nats"]
        + [f"drive_{t}" for t in traits]
        + ["reward_raw", "reward_weighted"]
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def _check_step(state: DriveState, q: np.ndarray, models) -> None:
    if abs(float(state.drive.sum())) > 1e-12:
        raise InvariantError(f"drives do not sum to zero: {state.drive.sum()!r}")
    if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-9:
        raise InvariantError(f"q left the simplex: {q}")
    if abs(state.trailing.sum() - 1.0) > 1e-9:
        raise InvariantError("trailing emotion frequencies are not normalized")
    if np.any(model_matrix(models) <= 0):
        raise InvariantError("an experience distribution lost strict positivity")


def run_experiment(config: ExperimentConfig, out_dir: Optional[os.PathLike] = None, check_invariants: bool = True) -> RunSummary:
    """Run the loop for ``config.horizon`` steps.

    Writes the timeline CSV and a JSON summary into ``out_dir`` (falling back
    to ``config.output_dir``); with neither set nothing is written.
    """
    started = time.perf_counter()
    out_dir = out_dir if out_dir is not None else config.output_dir
    space = config.space
    character = config.character
    target = character.target.values
    specs = config.activities
    n = len(specs)
    policy_rng, env_rng = make_streams(config.seed)

    models = [ExperienceModel(space, a.id, None, config.prior_weight) for a in specs]
    state = DriveState.initial(character, config.policy.window_length)
    q = MixtureWeights.uniform(n)
    current_obj = objective(target, model_matrix(models), q.q)

    horizon = config.horizon
    tail_start = horizon - max(1, int(round(config.tail_fraction * horizon)))
    tv_tail, kl_tail, kl_inf = [], [], 0
    plays = Counter()
    mechanisms = Counter()
    credits_raw = credits_weighted = 0.0

    writer = fh = None
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        fh = open(out_path / config.timeline_name, "w", newline="", encoding="utf-8")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(timeline_header(config))
    try:
        for step in range(horizon):
            trace = select_activity(q, models, state, config.policy, policy_rng)
            a = trace.activity
            spec = specs[a]
            ep = simulate_episode(spec, env_rng)
            v = episode_emotion(ep, spec, config)
            models[a] = update_experience(models[a], v)
            state = push_episode(state, character, v)

            weight = 1.0
            if config.policy.utility_mode == "weighted":
                weight = utility_weight(character, models[a], config.policy.utility_lambda)
            credits_raw += ep.reward
            credits_weighted += weight * ep.reward

            if (step + 1) % config.reoptimize_every == 0:
                warm = MixtureWeights((1 - WARM_START_MIX) * q.q + WARM_START_MIX / n)
                res = optimize_weights(character, models, config.solver, warm)
                q = res.q_star
                current_obj = res.objective
            if check_invariants:
                _check_step(state, q.q, models)

            plays[spec.id] += 1
            mechanisms[trace.mechanism] += 1
            if step >= tail_start:
                tv_tail.append(total_variation(state.trailing, target))
                if np.all(state.trailing > 0):
                    kl_tail.append(kl_divergence(target, state.trailing))
                else:
                    kl_inf += 1

            if writer is not None:
                writer.writerow(
                    [step, spec.id, trace.mechanism]
                    + [_fmt(x) for x in v.values]
                    + [_fmt(x) for x in state.trailing]
                    + [_fmt(x) for x in q.q]
                    + [_fmt(current_obj)]
                    + [_fmt(x) for x in state.drive]
                    + [_fmt(ep.reward), _fmt(weight * ep.reward)]
                )
    finally:
        if fh is not None:
            fh.close()

    summary = RunSummary(
        final_q=q.q.tolist(),
        final_trailing=state.trailing.tolist(),
        final_objective=current_obj,
        final_tv=total_variation(state.trailing, target),
        play_counts={a.id: plays[a.id] for a in specs},
        credits_raw=credits_raw,
        credits_weighted=credits_weighted,
        wall_seconds=time.perf_counter() - started,
        tail_steps=len(tv_tail),
        tv_tail_mean=float(np.mean(tv_tail)),
        kl_tail_mean=float(np.mean(kl_tail)) if kl_tail and not kl_inf else None,
        kl_tail_infinite_steps=kl_inf,
        mechanism_counts=dict(sorted(mechanisms.items())),
    )
    if sum(summary.play_counts.values()) != horizon:
        raise InvariantError("play counts do not sum to the horizon")
    if out_dir is not None:
        with open(Path(out_dir) / config.summary_name, "w", encoding="utf-8") as fh:
            json.dump(summary.to_dict(), fh, indent=2)
            fh.write("\n")
    return summary
