#!/usr/bin/env python3
"""Grid-search pairs of game specs whose emotion profiles pass closest to a character.

Used to pick the two games in configs/feasible_two_games.json.
"""
import argparse
import itertools

import numpy as np

from taes.core import Character, Distribution, EmotionSpace, total_variation
from taes.envs import ActivitySpec
from taes.harness import ExperimentConfig, estimate_latent

parser = argparse.ArgumentParser()
parser.add_argument("--character", type=float, nargs=3, default=[0.4, 0.35, 0.25])
parser.add_argument("--episodes", type=int, default=1500)
parser.add_argument("--min-peak", type=float, default=0.55, help="both profiles must be this peaked")
parser.add_argument("--top", type=int, default=10)


def main(args):
    target = np.asarray(args.character)
    character = Character(EmotionSpace("SCB"), Distribution(target))
    profiles = {}
    for edge, vol in itertools.product(np.round(np.arange(-0.8, 0.85, 0.1), 2), [0.01, 0.02, 0.03, 0.05, 0.07, 0.1]):
        spec = ActivitySpec("x", skill_edge=float(edge), volatility=vol)
        profiles[(float(edge), vol)] = estimate_latent(spec, ExperimentConfig(character, (spec,)), args.episodes)

    found = []
    for k1, k2 in itertools.combinations(profiles, 2):
        a, b = profiles[k1], profiles[k2]
        if min(a.max(), b.max()) < args.min_peak:
            continue
        d = a - b
        t = float(np.clip(np.dot(target - b, d) / np.dot(d, d), 0, 1))
        if 0.2 < t < 0.8:
            found.append((total_variation(b + t * d, target), k1, k2, t))
    found.sort()
    for gap, k1, k2, t in found[: args.top]:
        print(f"TV gap {gap:.5f}  (edge, vol) = {k1} / {k2}  weight on first = {t:.3f}")


if __name__ == "__main__":
    main(parser.parse_args())
