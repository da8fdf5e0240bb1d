"""Task selection by emotional stationarity.

An agent picks activities so that the long-run statistics of its emotionally
graded experience match a target distribution (its character).
"""

from .core import (
    Character,
    Distribution,
    EmotionSpace,
    ExperienceModel,
    MixtureWeights,
    kl_divergence,
    mixture_experience,
    total_variation,
    update_experience,
)
from .envs import ActivitySpec, EpisodeRecord, EvaluatorConfig, evaluate_episode, simulate_episode
from .harness import ExperimentConfig, RunSummary, feasibility_report, load_config, run_experiment
from .optimizer import SolverConfig, SolverResult, grid_oracle, optimize_weights
from .policy import (
    DriveState,
    PolicyConfig,
    SelectionTrace,
    push_episode,
    record_utility_emotion,
    select_activity,
    utility_weight,
)

__version__ = "0.1.0"
