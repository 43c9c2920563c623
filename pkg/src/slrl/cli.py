"""``slrl`` command line.

Exit codes: 0 on success, 2 for bad arguments or config, 3 when a run fails.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import env, harness
from .config import ConfigError, build_configs, load_config
from .curves import write_curve
from .demonstrator import (
    DEFAULT_N_TRAJECTORIES,
    DEFAULT_NOISE,
    UserTrajectoryStore,
    estimate_user_policy,
    read_demonstrations,
    warm_start_params,
    write_demonstrations,
)
from .pgella import compare_with_single_task, pgella_train, write_model
from .plot import PlotInputError, plot_emit
from .policy_gradient import rollout, train_pg, write_policy
from .qlearning import train_q, write_qtable

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("slrl")


class UsageError(Exception):
    pass


def _task_id(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"task must be an integer, got {text!r}") from None
    if not 1 <= value <= len(env.TABLE1_FRICTION):
        raise argparse.ArgumentTypeError(f"task must be in 1..{len(env.TABLE1_FRICTION)}, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {value}")
    return value


def _positive_int(text: str) -> int:
    value = _nonneg_int(text)
    if value == 0:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _task_list(text: str) -> list[int]:
    ids = [_task_id(part) for part in text.split(",") if part.strip()]
    if not ids or len(set(ids)) != len(ids):
        raise argparse.ArgumentTypeError(f"expected distinct comma-separated task ids, got {text!r}")
    return ids


def _common(p: argparse.ArgumentParser, task_default=2, out_default="out"):
    p.add_argument("--task", type=_task_id, default=task_default, help="task id 1..5 (default %(default)s)")
    p.add_argument("--seed", type=_nonneg_int, default=0, help="random seed (default %(default)s)")
    p.add_argument("--episodes", type=_nonneg_int, default=None, help="episode budget; overrides the config")
    p.add_argument("--config", type=Path, default=None, help="flat 'key = value' config file")
    p.add_argument("--out", type=Path, default=Path(out_default), help="output directory (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slrl", description="Navigation RL learners and experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("q-train", help="tabular Q-learning")
    _common(p)
    p.add_argument("--demos", type=Path, default=None, help="demonstration CSV for the user policy (q0 > 0)")

    p = sub.add_parser("pg-train", help="REINFORCE on a continuous policy")
    _common(p)
    p.add_argument("--no-warm-start", action="store_true", help="skip the demonstrator phase")
    p.add_argument("--trajectory-log", action="store_true",
                   help="also write one evaluation rollout of the learned policy")

    p = sub.add_parser("pgella-train", help="online multi-task learning over the task suite")
    _common(p)
    p.add_argument("--tasks", type=_task_list, default=None,
                   help="comma-separated task order (default: all tasks, seeded shuffle)")
    p.add_argument("--no-demonstrator", action="store_true", help="train each task without a warm start")
    p.add_argument("--n-eval", type=_positive_int, default=25, help="evaluation episodes per task")

    p = sub.add_parser("gridsearch", help="pick PG learning rates from the grid")
    _common(p)

    p = sub.add_parser("demo-gen", help="write scripted demonstrations")
    _common(p)
    p.add_argument("--n", type=_positive_int, default=DEFAULT_N_TRAJECTORIES, help="trajectories")
    p.add_argument("--noise", type=float, default=DEFAULT_NOISE, help="random-action probability")
    p.add_argument("--state-dim", type=int, choices=(2, 3), default=2)

    p = sub.add_parser("experiment", help="run a seeded experiment")
    p.add_argument("name", choices=harness.EXPERIMENTS)
    _common(p, out_default="results")
    p.add_argument("--n-seeds", type=_positive_int, default=len(harness.DEFAULT_SEEDS),
                   help="seeds seed..seed+n-1 (default %(default)s)")
    p.add_argument("--tasks", type=_task_list, default=None, help="task ids for gridsearch")

    p = sub.add_parser("plot", help="render curve CSVs as SVG")
    p.add_argument("curves", nargs="+", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--window", type=_positive_int, default=harness.SMOOTHING_WINDOW)
    p.add_argument("--title", default="")
    return parser


def _configs(args):
    values = load_config(args.config) if args.config is not None else {}
    return build_configs(values, episodes=args.episodes)


def cmd_q_train(args, cfgs):
    task = env.get_task(args.task)
    cfg = cfgs["q"]
    user = None
    if cfg.q0 > 0:
        if args.demos is not None:
            store = read_demonstrations(args.demos)
        else:
            store = UserTrajectoryStore.collect(task, seed=args.seed, state_dim=cfg.state_dim)
        user = estimate_user_policy(store)
    table, curve = train_q(task, cfg, user, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    write_curve(args.out / "curve.csv", curve)
    write_qtable(args.out / "qtable.csv", table)


def cmd_pg_train(args, cfgs):
    task = env.get_task(args.task)
    warm = None if args.no_warm_start else warm_start_params(task)
    policy, curve = train_pg(task, cfgs["pg"], warm, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    write_curve(args.out / "curve.csv", curve)
    write_policy(args.out / "policy.csv", policy)
    if args.trajectory_log:
        rows = []
        rollout(task, policy, env.derive_seed(args.seed, 8), np.random.default_rng(env.derive_seed(args.seed, 8)), rows)
        env.write_trajectory_log(args.out / "trajectory.csv", rows)


def cmd_pgella_train(args, cfgs):
    tasks = env.make_task_suite()
    if args.tasks is None:
        order = [int(i) for i in np.random.default_rng(env.derive_seed(args.seed, 10)).permutation(len(tasks))]
        stream = [tasks[i] for i in order]
    else:
        stream = [env.get_task(t) for t in args.tasks]
    state = pgella_train(stream, cfgs["ella"], cfgs["pg"], args.seed, not args.no_demonstrator)
    args.out.mkdir(parents=True, exist_ok=True)
    write_model(args.out / "model.csv", state)
    write_curve(args.out / "curves.csv", [rec for t in stream for rec in state.stats[t.task_id].curve])
    rows = compare_with_single_task(state, stream, args.n_eval, args.seed)
    with open(args.out / "comparison.csv", "w") as fh:
        fh.write("task_id,single_task_reward,reconstructed_reward\n")
        for task_id, single, recon in rows:
            fh.write(f"{task_id},{single!r},{recon!r}\n")


def cmd_gridsearch(args, cfgs):
    spec = harness.ExperimentSpec("gridsearch", (args.task,), (args.seed,), args.episodes, args.out,
                                  pg_config=cfgs["pg"])
    harness.run_gridsearch(spec)


def cmd_demo_gen(args, cfgs):
    task = env.get_task(args.task)
    if not 0 <= args.noise < 0.5:
        raise UsageError(f"--noise must be in [0, 0.5), got {args.noise}")
    store = UserTrajectoryStore.collect(task, args.n, args.noise, args.seed, args.state_dim)
    args.out.mkdir(parents=True, exist_ok=True)
    write_demonstrations(args.out / "demos.csv", store)


def cmd_experiment(args, cfgs):
    seeds = tuple(range(args.seed, args.seed + args.n_seeds))
    task_ids = tuple(args.tasks) if args.tasks else (args.task,)
    spec = harness.ExperimentSpec(args.name, task_ids, seeds, args.episodes, args.out,
                                  cfgs["q"], cfgs["pg"], cfgs["ella"])
    harness.run_experiment(spec)


def cmd_plot(args, cfgs):
    plot_emit(args.curves, args.output, args.window, args.title)


COMMANDS = {
    "q-train": cmd_q_train,
    "pg-train": cmd_pg_train,
    "pgella-train": cmd_pgella_train,
    "gridsearch": cmd_gridsearch,
    "demo-gen": cmd_demo_gen,
    "experiment": cmd_experiment,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfgs = _configs(args) if args.command != "plot" else {}
    except ConfigError as exc:
        print(f"slrl: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](args, cfgs)
    except (UsageError, PlotInputError) as exc:
        print(f"slrl: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - any failure inside a run maps to one exit code
        log.debug("run failed", exc_info=True)
        print(f"slrl: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
