import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy import testing as npt

from taes.core import Character, DimensionError, Distribution, EmotionSpace, ExperienceModel, MixtureWeights
from taes.policy import (
    DRIVE_OVERRIDE,
    EXPLORATION,
    STOCHASTIC,
    DriveState,
    PolicyConfig,
    push_episode,
    record_utility_emotion,
    select_activity,
    utility_weight,
)

from conftest import model_with

QUIET = PolicyConfig(exploration_epsilon=0.0, min_plays_per_activity=0)


@pytest.fixture
def uniform_character(scb):
    return Character(scb, Distribution([1 / 3, 1 / 3, 1 / 3]))


def state_with_drive(drive):
    drive = np.asarray(drive, dtype=float)
    return DriveState(50, (), np.full(drive.size, 1 / drive.size) - drive, drive)


def test_initial_drive_is_zero(uniform_character):
    state = DriveState.initial(uniform_character)
    npt.assert_array_equal(state.drive, [0, 0, 0])
    npt.assert_array_equal(state.trailing, uniform_character.target.values)


def test_drive_hand_values(uniform_character):
    state = DriveState.initial(uniform_character, window_length=5)
    state = push_episode(state, uniform_character, [0.5, 0.3, 0.2])
    npt.assert_allclose(state.drive, [-1 / 6, 1 / 30, 2 / 15], atol=1e-15)
    assert abs(state.drive.sum()) <= 1e-12


def test_window_is_fifo(uniform_character):
    state = DriveState.initial(uniform_character, window_length=2)
    for v in ([1, 0, 0], [0, 1, 0], [0, 0, 1]):
        state = push_episode(state, uniform_character, v)
    assert len(state.history) == 2
    npt.assert_allclose(state.trailing, [0, 0.5, 0.5])


def test_push_dimension_error(uniform_character):
    with pytest.raises(DimensionError):
        push_episode(DriveState.initial(uniform_character), uniform_character, [0.5, 0.5])


@given(st.lists(st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda v: sum(v) > 0), max_size=80),
       st.integers(1, 20))
def test_drive_zero_sum_property(vectors, window):
    space = EmotionSpace("SCBU")
    character = Character(space, Distribution([0.3, 0.3, 0.25, 0.15]))
    state = DriveState.initial(character, window)
    for v in vectors:
        state = push_episode(state, character, np.asarray(v) / sum(v))
        assert abs(state.drive.sum()) <= 1e-12
        assert len(state.history) <= window


def test_degenerate_q_is_stochastic(scb):
    models = [model_with(scb, [0.2, 0.3, 0.5], str(i)) for i in range(3)]
    rng = np.random.default_rng(0)
    for _ in range(50):
        tr = select_activity(MixtureWeights([1, 0, 0]), models, state_with_drive([0, 0, 0]), QUIET, rng)
        assert (tr.activity, tr.mechanism) == (0, STOCHASTIC)


def test_drive_override_picks_peaked_max(scb):
    models = [model_with(scb, [0.8, 0.1, 0.1], "a"), model_with(scb, [0.2, 0.3, 0.5], "b")]
    cfg = PolicyConfig(drive_threshold=0.25, peakedness_threshold=0.5, exploration_epsilon=0.0, min_plays_per_activity=0)
    tr = select_activity(MixtureWeights([0, 1]), models, state_with_drive([0.3, -0.1, -0.2]), cfg, np.random.default_rng(0))
    assert (tr.activity, tr.mechanism) == (0, DRIVE_OVERRIDE)
    assert tr.rng_draws == 0


def test_negative_drive_picks_min(scb):
    models = [model_with(scb, [0.8, 0.1, 0.1], "a"), model_with(scb, [0.1, 0.3, 0.6], "b")]
    tr = select_activity(MixtureWeights([1, 0]), models, state_with_drive([-0.3, 0.1, 0.2]), QUIET, np.random.default_rng(0))
    assert (tr.activity, tr.mechanism) == (1, DRIVE_OVERRIDE)


def test_flat_models_fall_through(scb):
    models = [ExperienceModel(scb, str(i)) for i in range(2)]
    tr = select_activity(MixtureWeights([0, 1]), models, state_with_drive([0.3, -0.1, -0.2]), QUIET, np.random.default_rng(0))
    assert (tr.activity, tr.mechanism) == (1, STOCHASTIC)


def test_below_threshold_no_override(scb):
    models = [model_with(scb, [0.8, 0.1, 0.1], "a"), model_with(scb, [0.2, 0.3, 0.5], "b")]
    tr = select_activity(MixtureWeights([0, 1]), models, state_with_drive([0.25, -0.1, -0.15]), QUIET, np.random.default_rng(0))
    assert tr.mechanism == STOCHASTIC


def test_override_ties_lowest_index(scb):
    models = [model_with(scb, [0.6, 0.2, 0.2], "a"), model_with(scb, [0.6, 0.3, 0.1], "b")]
    tr = select_activity(MixtureWeights([0, 1]), models, state_with_drive([0.3, -0.3, 0.0]), QUIET, np.random.default_rng(0))
    assert (tr.activity, tr.mechanism) == (0, DRIVE_OVERRIDE)


def test_underplayed_forces_exploration(scb):
    models = [
        ExperienceModel(scb, "a", [3, 0, 0], observations=3),
        ExperienceModel(scb, "b", [1, 0, 0], observations=1),
        ExperienceModel(scb, "c", [0, 3, 0], observations=3),
    ]
    cfg = PolicyConfig(min_plays_per_activity=3, exploration_epsilon=0.0)
    rng = np.random.default_rng(1)
    for _ in range(20):
        tr = select_activity(MixtureWeights([1, 0, 0]), models, state_with_drive([0.3, -0.3, 0]), cfg, rng)
        assert (tr.activity, tr.mechanism) == (1, EXPLORATION)


def test_epsilon_exploration_rate(scb):
    models = [model_with(scb, [0.2, 0.3, 0.5], str(i)) for i in range(4)]
    cfg = PolicyConfig(exploration_epsilon=0.2, min_plays_per_activity=0)
    rng = np.random.default_rng(2)
    mech = [select_activity(MixtureWeights([1, 0, 0, 0]), models, state_with_drive([0, 0, 0]), cfg, rng).mechanism for _ in range(20000)]
    assert mech.count(EXPLORATION) / len(mech) == pytest.approx(0.2, abs=0.01)


def test_empty_models(scb):
    with pytest.raises(ValueError):
        select_activity(MixtureWeights([1.0]), [], state_with_drive([0, 0, 0]), QUIET, np.random.default_rng(0))


def test_selection_determinism(scb):
    models = [model_with(scb, p, str(i)) for i, p in enumerate([[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]])]
    q = MixtureWeights([0.2, 0.5, 0.3])
    state = state_with_drive([0.1, -0.05, -0.05])
    cfg = PolicyConfig(exploration_epsilon=0.1, min_plays_per_activity=0)
    runs = []
    for _ in range(2):
        rng = np.random.default_rng(99)
        runs.append([repr(select_activity(q, models, state, cfg, rng)) for _ in range(500)])
    assert runs[0] == runs[1]


def test_sampling_law(scb):
    q = np.array([0.1, 0.25, 0.4, 0.25])
    models = [ExperienceModel(scb, str(i)) for i in range(4)]
    rng = np.random.default_rng(12345)
    picks = [select_activity(MixtureWeights(q), models, state_with_drive([0, 0, 0]), QUIET, rng).activity for _ in range(100000)]
    freq = np.bincount(picks, minlength=4) / len(picks)
    assert 0.5 * np.abs(freq - q).sum() <= 0.01


@given(st.floats(0.0, 0.18), st.floats(0.55, 0.9))
def test_override_argmax_stability(bump, base):
    space = EmotionSpace("SCB")
    rest = (1 - base) / 2
    chosen = [base, rest, rest]
    raised = [base + bump * (1 - base), rest * (1 - bump), rest * (1 - bump)]
    other = [0.5, 0.25, 0.25]
    state = state_with_drive([0.3, -0.15, -0.15])
    picks = []
    for p in (chosen, raised):
        models = [model_with(space, other, "o"), model_with(space, p, "c")]
        picks.append(select_activity(MixtureWeights([1, 0]), models, state, QUIET, np.random.default_rng(0)).activity)
    if picks[0] == 1:
        assert picks[1] == 1


def test_utility_weight_values(scb):
    character = Character(scb, Distribution([0.5, 0.25, 0.25]))
    same = model_with(scb, [0.5, 0.25, 0.25])
    other = model_with(scb, [0.25, 0.5, 0.25])
    assert utility_weight(character, same, 3.0) == pytest.approx(1.0, abs=1e-12)
    assert utility_weight(character, other, 0.0) == 1.0
    assert utility_weight(character, other, 1.0) == pytest.approx(math.exp(-0.25 * math.log(2)), abs=1e-12)
    assert utility_weight(character, other, 1.0) == pytest.approx(0.8409, abs=1e-4)


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 5.0))
def test_utility_weight_monotone(seed, lam):
    rng = np.random.default_rng(seed)
    space = EmotionSpace("SCB")
    character = Character(space, Distribution(rng.dirichlet(np.ones(3)) * 0.97 + 0.01))
    a, b = (model_with(space, rng.dirichlet(np.ones(3)) * 0.97 + 0.01, x) for x in "ab")
    from taes.core import kl_divergence

    da = kl_divergence(character.target, a.probabilities())
    db = kl_divergence(character.target, b.probabilities())
    wa, wb = utility_weight(character, a, lam), utility_weight(character, b, lam)
    if da < db - 1e-9:
        assert wa > wb
    elif db < da - 1e-9:
        assert wb > wa


def test_utility_emotion_vectors():
    space = EmotionSpace("SCBU")
    npt.assert_allclose(record_utility_emotion({"S"}, True, space).values, [0.5, 0, 0, 0.5])
    npt.assert_allclose(record_utility_emotion(set(), True, space).values, [0, 0, 0, 1])
    npt.assert_allclose(record_utility_emotion({"C", "B"}, False, space).values, [0, 0.5, 0.5, 0])
    npt.assert_allclose(record_utility_emotion(set(), False, space).values, [0, 0, 1, 0])


def test_utility_emotion_errors():
    space = EmotionSpace("SCBU")
    with pytest.raises(ValueError):
        record_utility_emotion({"S"}, True, space, utility_mode="weighted")
    with pytest.raises(KeyError):
        record_utility_emotion({"S"}, True, EmotionSpace("SCB"))


def test_policy_config_ranges(scb):
    with pytest.raises(ValueError):
        PolicyConfig(exploration_epsilon=1.0)
    with pytest.raises(ValueError):
        PolicyConfig(utility_mode="maybe")
    with pytest.raises(ValueError):
        PolicyConfig(drive_threshold=-0.1)
    with pytest.raises(ValueError):
        PolicyConfig(peakedness_threshold=0.3).check_space(scb)
    with pytest.raises(ValueError):
        PolicyConfig(utility_mode="as_emotion").check_space(scb)
