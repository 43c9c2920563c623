"""Seeded experiment runners that write curve CSVs and summaries."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import env
from .curves import CurveRecord, moving_average, rewards, write_curve
from .demonstrator import UserTrajectoryStore, estimate_user_policy, warm_start_params
from .pgella import EllaConfig, compare_with_single_task, pgella_train, write_model
from .policy_gradient import PGConfig, grid_search, train_pg
from .qlearning import QConfig, train_q

log = logging.getLogger(__name__)

EXPERIMENTS = ("user-policy-compare", "state-size-compare", "pg-vs-user", "pgella-suite", "gridsearch")
DEFAULT_SEEDS = (0, 1, 2, 3, 4)
SMOOTHING_WINDOW = 100


@dataclass
class ExperimentSpec:
    name: str
    task_ids: tuple = (2,)
    seeds: tuple = DEFAULT_SEEDS
    episode_budget: int | None = None
    output_path: Path = Path("results")
    q_config: QConfig = field(default_factory=QConfig)
    pg_config: PGConfig = field(default_factory=PGConfig)
    ella_config: EllaConfig = field(default_factory=EllaConfig)

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        if not self.seeds:
            raise ValueError("an experiment needs at least one seed")
        self.output_path = Path(self.output_path)


def _smoothed_rows(condition: str, curves: dict, window: int):
    rows = []
    per_seed = {seed: rewards(c) for seed, c in curves.items()}
    for seed, r in per_seed.items():
        for i, v in enumerate(moving_average(r, window)):
            rows.append([condition, i + 1, seed, repr(float(v))])
    pooled = np.mean(np.stack(list(per_seed.values())), axis=0)
    for i, v in enumerate(moving_average(pooled, window)):
        rows.append([condition, i + 1, "pooled", repr(float(v))])
    return rows


def write_smoothed(path, conditions: dict, window: int = SMOOTHING_WINDOW) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["condition", "episode", "seed", "ma_reward"])
        for name, curves in conditions.items():
            writer.writerows(_smoothed_rows(name, curves, window))


def _write_condition(out: Path, stem: str, curves: dict) -> Path:
    path = out / f"{stem}.csv"
    write_curve(path, [rec for seed in curves for rec in curves[seed]])
    return path


def run_user_policy_compare(spec: ExperimentSpec) -> dict:
    """Q-learning with (p, q) = (0.2, 0.65) against (0.2, 0)."""
    out = spec.output_path
    out.mkdir(parents=True, exist_ok=True)
    task = env.get_task(spec.task_ids[0])
    base = spec.q_config if spec.episode_budget is None else replace(spec.q_config, episodes=spec.episode_budget)
    arms = {"I": replace(base, p0=0.2, q0=0.65, state_dim=2), "II": replace(base, p0=0.2, q0=0.0, state_dim=2)}
    curves = {name: {} for name in arms}
    for seed in spec.seeds:
        user = estimate_user_policy(UserTrajectoryStore.collect(task, seed=seed))
        for name, cfg in arms.items():
            log.info("user-policy-compare seed=%s arm=%s", seed, name)
            curves[name][seed] = train_q(task, cfg, user if cfg.q0 > 0 else None, seed)[1]
    files = {name: _write_condition(out, f"user_policy_{name}", c) for name, c in curves.items()}
    write_smoothed(out / "user_policy_ma.csv", curves)
    return {"curves": curves, "files": files}


def run_state_size_compare(spec: ExperimentSpec) -> dict:
    """Identical Q-learning on the 2D and the 3D discretization."""
    out = spec.output_path
    out.mkdir(parents=True, exist_ok=True)
    task = env.get_task(spec.task_ids[0])
    base = spec.q_config if spec.episode_budget is None else replace(spec.q_config, episodes=spec.episode_budget)
    arms = {"2D": replace(base, state_dim=2), "3D": replace(base, state_dim=3)}
    curves = {name: {} for name in arms}
    for seed in spec.seeds:
        for name, cfg in arms.items():
            log.info("state-size-compare seed=%s arm=%s", seed, name)
            curves[name][seed] = train_q(task, cfg, None, seed)[1]
    files = {name: _write_condition(out, f"state_size_{name}", c) for name, c in curves.items()}
    write_smoothed(out / "state_size_ma.csv", curves)
    return {"curves": curves, "files": files}


def pg_vs_user_summary(curve, n_demo: int):
    demo, learned = curve[:n_demo], curve[n_demo:]
    return {
        "pi_u": (float(np.mean([r.cum_reward for r in demo])), float(np.mean([r.steps for r in demo]))),
        "pi": (float(np.mean([r.cum_reward for r in learned])), float(np.mean([r.steps for r in learned]))),
    }


def run_pg_vs_user(spec: ExperimentSpec) -> dict:
    """Demonstrator-driven episodes followed by learned-policy episodes."""
    out = spec.output_path
    out.mkdir(parents=True, exist_ok=True)
    task = env.get_task(spec.task_ids[0])
    cfg = spec.pg_config if spec.episode_budget is None else replace(spec.pg_config, episodes=spec.episode_budget)
    curves, summaries = {}, {}
    for seed in spec.seeds:
        log.info("pg-vs-user seed=%s", seed)
        _, curve = train_pg(task, cfg, warm_start_params(task), seed)
        curves[seed] = curve
        summaries[seed] = pg_vs_user_summary(curve, cfg.episodes)
    _write_condition(out, "pg_vs_user", curves)
    with open(out / "pg_vs_user_table.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "policy", "avg_cum_reward", "avg_steps"])
        for seed, summary in summaries.items():
            for policy in ("pi_u", "pi"):
                reward, steps = summary[policy]
                writer.writerow([seed, policy, f"{reward:.3f}", f"{steps:.3f}"])
    return {"curves": curves, "summaries": summaries}


def run_pgella_suite(spec: ExperimentSpec, n_eval: int = 25) -> dict:
    """Feed the five tasks in a seeded random order; compare to single-task PG."""
    out = spec.output_path
    out.mkdir(parents=True, exist_ok=True)
    tasks = env.make_task_suite()
    cfg = spec.pg_config if spec.episode_budget is None else replace(spec.pg_config, episodes=spec.episode_budget)
    rows, orders, states = [], {}, {}
    for seed in spec.seeds:
        order = [int(i) for i in np.random.default_rng(env.derive_seed(seed, 10)).permutation(len(tasks))]
        orders[seed] = [tasks[i].task_id for i in order]
        log.info("pgella-suite seed=%s order=%s", seed, orders[seed])
        state = states[seed] = pgella_train([tasks[i] for i in order], spec.ella_config, cfg, seed)
        write_model(out / f"pgella_model_seed{seed}.csv", state)
        write_curve(out / f"pgella_curves_seed{seed}.csv",
                    [rec for t in orders[seed] for rec in state.stats[t].curve])
        for task_id, single, recon in compare_with_single_task(state, tasks, n_eval, seed):
            rows.append((seed, task_id, single, recon))
    with open(out / "pgella_comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "task_id", "single_task_reward", "reconstructed_reward"])
        for seed, task_id, single, recon in rows:
            writer.writerow([seed, task_id, repr(single), repr(recon)])
    return {"rows": rows, "orders": orders, "states": states}


def run_gridsearch(spec: ExperimentSpec, budget: int = 100) -> dict:
    out = spec.output_path
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    with open(out / "gridsearch.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["task_id", "seed", "alpha_lin", "alpha_ang", "score", "chosen"])
        for task_id in spec.task_ids:
            task = env.get_task(task_id)
            for seed in spec.seeds:
                best, scores = grid_search(task, seed, spec.episode_budget or budget,
                                           warm_start_params(task), base=spec.pg_config)
                results[(task_id, seed)] = best
                for (a_lin, a_ang), score in scores.items():
                    writer.writerow([task_id, seed, repr(a_lin), repr(a_ang), repr(score),
                                     int((a_lin, a_ang) == best)])
    return results


RUNNERS = {
    "user-policy-compare": run_user_policy_compare,
    "state-size-compare": run_state_size_compare,
    "pg-vs-user": run_pg_vs_user,
    "pgella-suite": run_pgella_suite,
    "gridsearch": run_gridsearch,
}


def run_experiment(spec: ExperimentSpec):
    return RUNNERS[spec.name](spec)


def final_window(curve: list[CurveRecord], n: int) -> np.ndarray:
    return rewards(curve)[-n:]
