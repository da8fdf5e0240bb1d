"""Selection frequencies minimizing D(character || mixture experience).

The objective f(q) = sum_i P_i log(P_i / sum_a q_a p_ia) is convex on the
simplex. It is minimized by exponentiated gradient (entropic mirror
descent) with step halving whenever a step would raise the objective.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    EPS_FLOOR,
    Character,
    ExperienceModel,
    MixtureWeights,
    model_matrix,
)

MONOTONE_SLACK = 1e-12
MAX_HALVINGS = 40


class MonotonicityError(AssertionError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 10000
    tolerance: float = 1e-10
    step_size: float = 1.0

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations <= 0:
            raise ValueError("max_iterations must be a positive integer")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")


@dataclass(frozen=True)
class SolverResult:
    q_star: MixtureWeights
    objective: float
    iterations_used: int
    converged: bool
    trace: tuple[float, ...] = field(default=(), repr=False, compare=False)


def objective(target: np.ndarray, mat: np.ndarray, q: np.ndarray) -> float:
    """f(q) for target P (K,), model matrix (N, K) and weights q (N,)."""
    mix = q @ mat
    return float(np.sum(target * np.log(target / mix)))


def gradient(target: np.ndarray, mat: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Analytic gradient of :func:`objective` with respect to q."""
    mix = q @ mat
    return -(mat @ (target / mix))


def _check_models(mat: np.ndarray, target: np.ndarray) -> None:
    if mat.shape[1] != target.size:
        raise ValueError("experience models and character use different emotion spaces")
    if np.any(mat < EPS_FLOOR):
        raise ValueError("every experience distribution must be strictly positive")


def solve(
    target: np.ndarray,
    mat: np.ndarray,
    config: SolverConfig = SolverConfig(),
    q0: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, float, int, bool, list[float]]:
    """Array-level solver; returns (q, f, iterations, converged, trace)."""
    n = mat.shape[0]
    q = np.full(n, 1.0 / n) if q0 is None else np.array(q0, dtype=float)
    f = objective(target, mat, q)
    trace = [f]
    if n == 1:
        return q, f, 0, True, trace

    converged = False
    it = 0
    while it < config.max_iterations:
        it += 1
        g = gradient(target, mat, q)
        eta = config.step_size
        for _ in range(MAX_HALVINGS):
            logits = np.log(q, where=q > 0, out=np.full(n, -np.inf)) - eta * g
            w = np.exp(logits - logits.max())
            q_new = w / w.sum()
            f_new = objective(target, mat, q_new)
            if f_new <= f:
                break
            eta *= 0.5
        else:
            # no descent step found at any scale: stationary to working precision
            converged = True
            break
        if f_new > trace[-1] + MONOTONE_SLACK:
            raise MonotonicityError(f"objective rose from {trace[-1]} to {f_new}")
        decrease = f - f_new
        q, f = q_new, f_new
        trace.append(f)
        if decrease < config.tolerance:
            converged = True
            break
    return q, f, it, converged, trace


def optimize_weights(
    character: Character,
    models: Sequence[ExperienceModel],
    config: SolverConfig = SolverConfig(),
    initial: Optional[MixtureWeights] = None,
) -> SolverResult:
    if not models:
        raise ValueError("optimize_weights needs at least one experience model")
    mat = model_matrix(models)
    target = character.target.values
    _check_models(mat, target)
    q0 = None
    if initial is not None:
        if len(initial) != mat.shape[0]:
            raise ValueError("initial weights do not match the number of activities")
        q0 = initial.q
    q, f, it, conv, trace = solve(target, mat, config, q0)
    return SolverResult(MixtureWeights(q), f, it, conv, tuple(trace))


def simplex_lattice(n: int, divisions: int) -> np.ndarray:
    """All points of the simplex with coordinates in multiples of 1/divisions."""
    rows = []
    for cut in itertools.combinations(range(divisions + n - 1), n - 1):
        bounds = (-1,) + cut + (divisions + n - 1,)
        rows.append([bounds[i + 1] - bounds[i] - 1 for i in range(n)])
    return np.asarray(rows, dtype=float) / divisions


def grid_oracle(
    character: Character,
    models: Sequence[ExperienceModel],
    resolution: float,
) -> SolverResult:
    """Exhaustive search over the simplex lattice; a test oracle."""
    if not models:
        raise ValueError("grid_oracle needs at least one experience model")
    if len(models) > 4:
        raise ValueError("grid_oracle is limited to N <= 4 activities")
    if not 0 < resolution <= 0.5:
        raise ValueError("resolution must lie in (0, 0.5]")
    mat = model_matrix(models)
    target = character.target.values
    _check_models(mat, target)
    divisions = max(1, int(round(1.0 / resolution)))
    grid = simplex_lattice(mat.shape[0], divisions)
    mix = grid @ mat
    values = np.sum(target * np.log(target / mix), axis=1)
    best = int(np.argmin(values))
    return SolverResult(MixtureWeights(grid[best]), float(values[best]), len(grid), True)
