"""Episodic REINFORCE for linear-Gaussian velocity policies."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import env
from .curves import CurveRecord
from .env import ACTION_LIMIT, ContinuousObs, Task

N_FEATURES = 3
LEARNING_RATE_GRID = tuple(10.0 ** -j for j in range(3, 9))
N_EVAL_EPISODES = 25

# Per-task (alpha_lin, alpha_ang) reported for the Gazebo setup; kept as the
# nominal defaults of PGConfig.for_task.
TABLE1_LEARNING_RATES = {
    1: (1e-6, 1e-7),
    2: (1e-6, 1e-6),
    3: (1e-7, 1e-5),
    4: (1e-7, 1e-6),
    5: (1e-7, 1e-5),
}


@dataclass
class PGConfig:
    alpha_lin: float = 1e-3
    alpha_ang: float = 1e-3
    gamma: float = 0.9
    batch_size: int = 10
    episodes: int = 400
    sigma0: float = 0.3
    sigma_min: float = 0.01
    # baseline and gradient passes per batch while learning from demonstrator rollouts
    offpolicy_baseline: str = "floor"
    offpolicy_epochs: int = 10

    def __post_init__(self):
        if self.alpha_lin <= 0 or self.alpha_ang <= 0:
            raise ValueError("learning rates must be positive")
        if self.batch_size < 1 or self.offpolicy_epochs < 1:
            raise ValueError("batch_size and offpolicy_epochs must be >= 1")
        if self.episodes < 0:
            raise ValueError("episodes must be nonnegative")
        if not 0 < self.sigma_min <= self.sigma0:
            raise ValueError("need 0 < sigma_min <= sigma0")
        if self.offpolicy_baseline not in BASELINES:
            raise ValueError(f"offpolicy_baseline must be one of {sorted(BASELINES)}")

    @classmethod
    def for_task(cls, task_id: int, **overrides) -> "PGConfig":
        alpha_lin, alpha_ang = TABLE1_LEARNING_RATES[task_id]
        return cls(alpha_lin=alpha_lin, alpha_ang=alpha_ang, **overrides)


def features(obs: ContinuousObs) -> np.ndarray:
    return np.array([obs.d / 10.0, math.radians(obs.omega) / math.pi, 1.0])


@dataclass
class GaussianPolicy:
    theta_lin: np.ndarray
    theta_ang: np.ndarray
    sigma_lin: float
    sigma_ang: float

    @classmethod
    def zeros(cls, sigma: float, dim: int = N_FEATURES) -> "GaussianPolicy":
        return cls(np.zeros(dim), np.zeros(dim), float(sigma), float(sigma))

    @classmethod
    def from_vector(cls, theta, sigma: float) -> "GaussianPolicy":
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1 or theta.size % 2:
            raise ValueError(f"expected a stacked (theta_lin, theta_ang) vector, got shape {theta.shape}")
        half = theta.size // 2
        return cls(theta[:half].copy(), theta[half:].copy(), float(sigma), float(sigma))

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.theta_lin, self.theta_ang])

    @property
    def dim(self) -> int:
        return self.theta_lin.size

    def copy(self) -> "GaussianPolicy":
        return GaussianPolicy(self.theta_lin.copy(), self.theta_ang.copy(), self.sigma_lin, self.sigma_ang)

    def mean(self, phi) -> tuple[float, float]:
        return float(self.theta_lin @ phi), float(self.theta_ang @ phi)

    def log_prob(self, phi: np.ndarray, raw: np.ndarray) -> np.ndarray:
        """Per-step log density of raw actions; ``phi`` is (H, dim), ``raw`` is (H, 2)."""
        mu = np.stack([phi @ self.theta_lin, phi @ self.theta_ang], axis=1)
        sig = np.array([self.sigma_lin, self.sigma_ang])
        z = (raw - mu) / sig
        return np.sum(-0.5 * z * z - np.log(sig) - 0.5 * math.log(2 * math.pi), axis=1)


@dataclass
class Trajectory:
    """Observations are stored as features; actions are the raw samples."""

    phi: np.ndarray
    raw: np.ndarray
    rewards: np.ndarray
    success: bool

    @property
    def horizon(self) -> int:
        return len(self.rewards)


class Gradient(NamedTuple):
    theta_lin: np.ndarray
    theta_ang: np.ndarray
    sigma_lin: float
    sigma_ang: float

    def vector(self) -> np.ndarray:
        return np.concatenate([self.theta_lin, self.theta_ang, [self.sigma_lin, self.sigma_ang]])

    @classmethod
    def from_vector(cls, g, dim: int = N_FEATURES) -> "Gradient":
        g = np.asarray(g, dtype=float)
        return cls(g[:dim].copy(), g[dim:2 * dim].copy(), float(g[2 * dim]), float(g[2 * dim + 1]))


def sample_action(policy: GaussianPolicy, obs: ContinuousObs, rng):
    """Return ``(executed, raw)``; ``executed`` is the clamp of the Gaussian draw."""
    phi = features(obs)
    mu_lin, mu_ang = policy.mean(phi)
    noise = rng.standard_normal(2)
    raw = (mu_lin + policy.sigma_lin * noise[0], mu_ang + policy.sigma_ang * noise[1])
    return env.clamp_action(raw), raw


def rollout(task: Task, policy: GaussianPolicy, start, rng, log=None) -> Trajectory:
    """One episode under ``policy``.

    ``start`` seeds the initial pose; ``rng`` supplies the action noise.
    ``log``, if given, receives trajectory-log rows.
    """
    world = env.reset(task, start)
    obs = env.observe_continuous(world.pose, task.goal)
    noise = rng.standard_normal((task.max_steps, 2))
    tl0, tl1, tl2 = (float(v) for v in policy.theta_lin)
    ta0, ta1, ta2 = (float(v) for v in policy.theta_ang)
    s_lin, s_ang = policy.sigma_lin, policy.sigma_ang
    phis, raws, rewards = [], [], []
    t = 0
    while True:
        f0 = obs.d / 10.0
        f1 = math.radians(obs.omega) / math.pi
        raw_lin = tl0 * f0 + tl1 * f1 + tl2 + s_lin * noise[t, 0]
        raw_ang = ta0 * f0 + ta1 * f1 + ta2 + s_ang * noise[t, 1]
        world, obs, r, done = env.step(world, (raw_lin, raw_ang))
        phis.append((f0, f1, 1.0))
        raws.append((raw_lin, raw_ang))
        rewards.append(r)
        t += 1
        if log is not None:
            a = env.clamp_action((raw_lin, raw_ang))
            log.append((t, *world.pose, obs.d, obs.omega, a.v_lin, a.v_ang, r))
        if done:
            return Trajectory(np.array(phis), np.array(raws), np.array(rewards), r == env.SUCCESS_REWARD)


def avg_return(traj: Trajectory) -> float:
    if traj.horizon < 1:
        raise ValueError("average return of an empty trajectory is undefined")
    return float(np.mean(traj.rewards))


def trajectory_score(traj: Trajectory, policy: GaussianPolicy) -> np.ndarray:
    """Summed score of one trajectory as ``(d theta_lin, d theta_ang, d sigma_lin, d sigma_ang)``."""
    phi, raw = traj.phi, traj.raw
    out = []
    res = []
    for col, theta, sigma in ((0, policy.theta_lin, policy.sigma_lin), (1, policy.theta_ang, policy.sigma_ang)):
        r = raw[:, col] - phi @ theta
        out.append(phi.T @ r / sigma**2)
        res.append(np.sum((r * r - sigma**2) / sigma**3))
    return np.concatenate([out[0], out[1], res])


def _baseline(scores: np.ndarray, returns: np.ndarray, kind: str) -> np.ndarray:
    if kind == "optimal":
        # per component: sum(S^2 R) / sum(S^2)
        sq = scores**2
        den = sq.sum(axis=0)
        num = sq.T @ returns
        return np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    if kind == "none":
        return np.zeros(scores.shape[1])
    if kind == "floor":
        return np.full(scores.shape[1], RETURN_FLOOR)
    raise ValueError(f"unknown baseline {kind!r}")


BASELINES = ("optimal", "none", "floor")
# lowest attainable per-step reward: -0.5 * |v_lin| at the action limit
RETURN_FLOOR = -0.5 * ACTION_LIMIT


def reinforce_gradient(batch, policy: GaussianPolicy, baseline: str = "optimal") -> Gradient:
    """Likelihood-ratio gradient of the average per-step return.

    ``baseline="optimal"`` is the per-component variance-minimizing
    constant. The others exist for learning from another policy's
    rollouts: ``"floor"`` subtracts the lowest attainable per-step return
    so every trajectory gets a nonnegative weight.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    scores = np.array([trajectory_score(tr, policy) for tr in batch])
    returns = np.array([avg_return(tr) for tr in batch])
    b = _baseline(scores, returns, baseline)
    g = np.mean(scores * (returns[:, None] - b[None, :]), axis=0)
    return Gradient.from_vector(g, policy.dim)


class NonFiniteGradientError(FloatingPointError):
    pass


def pg_update(policy: GaussianPolicy, g: Gradient, cfg: PGConfig, update_sigma: bool = True) -> GaussianPolicy:
    if not np.all(np.isfinite(g.vector())):
        raise NonFiniteGradientError("refusing to apply a non-finite gradient")
    out = policy.copy()
    out.theta_lin = policy.theta_lin + cfg.alpha_lin * g.theta_lin
    out.theta_ang = policy.theta_ang + cfg.alpha_ang * g.theta_ang
    if update_sigma:
        out.sigma_lin = max(policy.sigma_lin + cfg.alpha_lin * policy.sigma_lin * g.sigma_lin, cfg.sigma_min)
        out.sigma_ang = max(policy.sigma_ang + cfg.alpha_ang * policy.sigma_ang * g.sigma_ang, cfg.sigma_min)
    return out


def episode_record(traj: Trajectory, episode: int, task: Task, seed) -> CurveRecord:
    steps = traj.horizon if traj.success else task.max_steps
    return CurveRecord(episode, task.task_id, int(seed), float(traj.rewards.sum()), steps)


def _run_phase(task, policy, behavior, cfg, rng, seed, first_episode, curve, learn, baseline, update_sigma, keep,
               epochs):
    batch = []
    kept = []
    for i in range(cfg.episodes):
        episode = first_episode + i
        actor = policy if behavior is None else behavior
        traj = rollout(task, actor, env.derive_seed(seed, 0, episode), rng)
        curve.append(episode_record(traj, episode, task, seed))
        if keep:
            kept.append(traj)
        if not learn:
            continue
        batch.append(traj)
        if len(batch) == cfg.batch_size:
            for _ in range(epochs):
                g = reinforce_gradient(batch, policy, baseline)
                policy = pg_update(policy, g, cfg, update_sigma)
            batch = []
    return policy, kept


def train_pg(task: Task, cfg: PGConfig, warm_start=None, seed=0, init: GaussianPolicy | None = None,
             learn_online: bool = True, keep_trajectories: bool = False):
    """Train a policy from zero parameters and return ``(policy, curve)``.

    With ``warm_start`` (a stacked parameter vector), the first
    ``cfg.episodes`` episodes are driven by that fixed controller with
    exploration ``sigma0`` while the learner's parameters are updated from
    those rollouts; the learner then acts for another ``cfg.episodes``
    episodes. Without it there is a single on-policy phase.
    """
    policy = GaussianPolicy.zeros(cfg.sigma0) if init is None else init.copy()
    rng = np.random.default_rng(env.derive_seed(seed, 2))
    curve: list[CurveRecord] = []
    trajectories = []
    if warm_start is not None:
        behavior = GaussianPolicy.from_vector(warm_start, cfg.sigma0)
        # sigma stays fixed here: the rollouts say nothing about the learner's own noise
        policy, kept = _run_phase(task, policy, behavior, cfg, rng, seed, 1, curve, True,
                                  cfg.offpolicy_baseline, False, keep_trajectories, cfg.offpolicy_epochs)
        trajectories += kept
    policy, kept = _run_phase(task, policy, None, cfg, rng, seed, len(curve) + 1, curve, learn_online,
                              "optimal", True, keep_trajectories, 1)
    trajectories += kept
    if keep_trajectories:
        return policy, curve, trajectories
    return policy, curve


def evaluate_policy(task: Task, policy: GaussianPolicy, n_episodes: int = N_EVAL_EPISODES, seed=0):
    """Mean cumulative reward and mean steps over fresh seeded episodes."""
    rng = np.random.default_rng(env.derive_seed(seed, 3))
    totals, steps = [], []
    for i in range(n_episodes):
        traj = rollout(task, policy, env.derive_seed(seed, 4, i), rng)
        totals.append(traj.rewards.sum())
        steps.append(traj.horizon if traj.success else task.max_steps)
    return float(np.mean(totals)), float(np.mean(steps))


def grid_search(task: Task, seed=0, budget: int = 100, warm_start=None, grid=LEARNING_RATE_GRID,
                n_eval: int = N_EVAL_EPISODES, base: PGConfig | None = None):
    """Pick ``(alpha_lin, alpha_ang)`` from ``grid x grid`` by evaluation reward.

    Each pair trains for ``budget`` episodes per phase and is scored by the
    mean cumulative reward over ``n_eval`` episodes. Ties go to the larger
    rates. Returns ``(best_pair, scores)`` with scores keyed by pair.
    """
    base = base or PGConfig()
    scores = {}
    for a_lin in grid:
        for a_ang in grid:
            cfg = replace(base, alpha_lin=a_lin, alpha_ang=a_ang, episodes=budget)
            policy, _ = train_pg(task, cfg, warm_start, seed)
            scores[(a_lin, a_ang)] = evaluate_policy(task, policy, n_eval, seed)[0]
    best = max(scores, key=lambda pair: (scores[pair], pair))
    return best, scores


def write_policy(path, policy: GaussianPolicy) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["param", "index", "value"])
        for name in ("theta_lin", "theta_ang"):
            for i, v in enumerate(getattr(policy, name)):
                writer.writerow([name, i, repr(float(v))])
        writer.writerow(["sigma_lin", 0, repr(float(policy.sigma_lin))])
        writer.writerow(["sigma_ang", 0, repr(float(policy.sigma_ang))])


def read_policy(path) -> GaussianPolicy:
    params = {"theta_lin": {}, "theta_ang": {}, "sigma_lin": {}, "sigma_ang": {}}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["param"] not in params:
                raise ValueError(f"{path}: unknown policy parameter {row['param']!r}")
            params[row["param"]][int(row["index"])] = float(row["value"])

    def vec(name):
        d = params[name]
        return np.array([d[i] for i in range(len(d))])

    return GaussianPolicy(vec("theta_lin"), vec("theta_ang"), params["sigma_lin"][0], params["sigma_ang"][0])

