"""Command line entry point: ``taes run|oracle|feasibility <config.json>``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .harness import (
    OUT_DIR_ENV,
    ConfigError,
    feasibility_report,
    latent_models,
    load_config,
    run_experiment,
)
from .optimizer import grid_oracle, optimize_weights

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _run_one(args):
    config, out_dir = args
    return run_experiment(config, out_dir).to_dict()


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    out_dir = args.out or os.environ.get(OUT_DIR_ENV) or config.output_dir
    if out_dir is None:
        raise ConfigError("no output directory: pass --out, set TAES_OUT_DIR or output.dir")
    if args.replicates == 1:
        summary = run_experiment(config, out_dir).to_dict()
        print(json.dumps(summary, indent=2))
        return EXIT_OK
    jobs = [
        (config.replace(seed=(config.seed + r) % 2**64), Path(out_dir) / f"rep{r:03d}")
        for r in range(args.replicates)
    ]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        summaries = list(pool.map(_run_one, jobs))
    tv = [s["tv_tail_mean"] for s in summaries]
    print(json.dumps({"replicates": len(summaries), "tv_tail_mean": float(np.mean(tv)), "tv_tail_std": float(np.std(tv))}, indent=2))
    return EXIT_OK


def cmd_oracle(args) -> int:
    config = load_config(args.config)
    if len(config.activities) > 4:
        raise ConfigError("the grid oracle supports at most 4 activities")
    models = latent_models(config, args.episodes, config.seed)
    solved = optimize_weights(config.character, models, config.solver)
    oracle = grid_oracle(config.character, models, args.resolution)
    gap = solved.objective - oracle.objective
    ok = abs(gap) <= args.tolerance or gap < 0
    print(json.dumps({
        "solver_objective": solved.objective,
        "solver_q": solved.q_star.q.tolist(),
        "solver_converged": solved.converged,
        "oracle_objective": oracle.objective,
        "oracle_q": oracle.q_star.q.tolist(),
        "resolution": args.resolution,
        "gap": gap,
        "pass": ok,
    }, indent=2))
    return EXIT_OK if ok else 1


def cmd_feasibility(args) -> int:
    config = load_config(args.config)
    models = latent_models(config, args.episodes, config.seed)
    report = feasibility_report(config.character, models, config.solver)
    out = report.to_dict()
    out["latent"] = {m.activity: m.probabilities().tolist() for m in models}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taes", description="Emotion-driven task selection simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write timeline + summary")
    run.add_argument("config")
    run.add_argument("--out", default=None, help=f"output directory (beats ${OUT_DIR_ENV} and the config)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--replicates", type=int, default=1, help="independent seeds seed, seed+1, ...")
    run.add_argument("--jobs", type=int, default=None)
    run.set_defaults(func=cmd_run)

    oracle = sub.add_parser("oracle", help="compare the solver against the grid oracle on simulated experience")
    oracle.add_argument("config")
    oracle.add_argument("--resolution", type=float, default=0.01)
    oracle.add_argument("--episodes", type=int, default=2000)
    oracle.add_argument("--tolerance", type=float, default=1e-3)
    oracle.set_defaults(func=cmd_oracle)

    feas = sub.add_parser("feasibility", help="is the character reachable by mixing the activities?")
    feas.add_argument("config")
    feas.add_argument("--episodes", type=int, default=10000)
    feas.set_defaults(func=cmd_feasibility)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"taes: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"taes: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
