"""Scripted go-to-goal demonstrator and the user policy estimated from it."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import env
from .env import ActionDiscrete, Task

# The goal cell accepts omega in [0, 24) degrees, so steer to its centre.
CONE_CENTER_DEG = 12.0
CONE_HALF_WIDTH_DEG = 12.0
DEFAULT_NOISE = 0.1
DEFAULT_N_TRAJECTORIES = 50
MAX_ATTEMPTS = 100

# proportional gains of the continuous warm-start controller, in 1/s
GAIN_DISTANCE = 0.6
GAIN_ANGLE = 1.2

N_ANGLE_BUCKETS = 31


class InfeasibleTaskError(RuntimeError):
    pass


class MissingDemonstrationsError(ValueError):
    pass


def controller_action(omega: float) -> ActionDiscrete:
    err = omega - CONE_CENTER_DEG
    if abs(err) > CONE_HALF_WIDTH_DEG:
        return ActionDiscrete.LEFT if err > 0 else ActionDiscrete.RIGHT
    return ActionDiscrete.FORWARD


def _rollout(task, noise_prob, seed, state_dim):
    rng = np.random.default_rng(seed)
    world = env.reset(task, seed)
    state = env.discrete_obs(world, state_dim)
    steps = []
    while True:
        omega = env.observe_continuous(world.pose, task.goal).omega
        a = controller_action(omega)
        if noise_prob > 0 and rng.random() < noise_prob:
            a = ActionDiscrete(int(rng.integers(3)))
        steps.append((state.key, a))
        _, state, r, done = env.step_discrete(world, a, state_dim)
        if done:
            return steps, r == env.SUCCESS_REWARD


def scripted_demo(task: Task, noise_prob: float = DEFAULT_NOISE, seed=0, state_dim: int = 2):
    """One successful demonstration as a list of ``(state_key, action)`` pairs.

    Unsuccessful attempts are discarded and retried from a fresh start
    drawn with a derived seed.
    """
    if not 0 <= noise_prob < 0.5:
        raise ValueError(f"noise_prob must be in [0, 0.5), got {noise_prob}")
    for attempt in range(MAX_ATTEMPTS):
        steps, ok = _rollout(task, noise_prob, env.derive_seed(seed, attempt), state_dim)
        if ok:
            return steps
    raise InfeasibleTaskError(
        f"demonstrator failed {MAX_ATTEMPTS} consecutive attempts on task {task.task_id}"
    )


@dataclass
class UserTrajectoryStore:
    trajectories: list = field(default_factory=list)

    @classmethod
    def collect(cls, task, n=DEFAULT_N_TRAJECTORIES, noise_prob=DEFAULT_NOISE, seed=0, state_dim=2):
        return cls([scripted_demo(task, noise_prob, env.derive_seed(seed, i), state_dim) for i in range(n)])

    def __len__(self):
        return len(self.trajectories)


def _bucket_distance(s, t) -> float:
    # first component is the distance bucket, the rest are angle buckets on a cycle
    total = float(s[0] - t[0]) ** 2
    for a, b in zip(s[1:], t[1:]):
        diff = abs(a - b) % N_ANGLE_BUCKETS
        total += float(min(diff, N_ANGLE_BUCKETS - diff)) ** 2
    return math.sqrt(total)


class UserPolicy:
    """Frequency estimate of the demonstrator's action choice per state.

    Lookups of unseen states fall back to the nearest visited state.
    """

    def __init__(self, freq: dict):
        if not freq:
            raise MissingDemonstrationsError("user policy has no visited states")
        self.freq = {k: tuple(int(c) for c in v) for k, v in freq.items()}
        self.states = sorted(self.freq)
        self._nearest = {}

    def __len__(self):
        return len(self.states)

    def prob(self, s) -> np.ndarray:
        counts = np.asarray(self.freq[tuple(s)], dtype=float)
        return counts / counts.sum()

    def nearest_state(self, s):
        s = tuple(s)
        hit = self._nearest.get(s)
        if hit is None:
            if s in self.freq:
                hit = s
            else:
                # self.states is sorted, so strict < keeps the lexicographically smallest tie
                best = math.inf
                for t in self.states:
                    dist = _bucket_distance(s, t)
                    if dist < best:
                        best, hit = dist, t
            self._nearest[s] = hit
        return hit

    def action(self, s) -> ActionDiscrete:
        counts = self.freq[self.nearest_state(s)]
        # max() returns the first maximum: Forward < Left < Right
        return ActionDiscrete(max(range(3), key=lambda i: (counts[i], -i)))


def estimate_user_policy(store: UserTrajectoryStore) -> UserPolicy:
    if len(store.trajectories) == 0 or not any(store.trajectories):
        raise MissingDemonstrationsError("cannot estimate a user policy from an empty store")
    freq = defaultdict(lambda: [0, 0, 0])
    for traj in store.trajectories:
        for s, a in traj:
            freq[tuple(s)][int(a)] += 1
    return UserPolicy(dict(freq))


def user_action(policy: UserPolicy, s) -> ActionDiscrete:
    return policy.action(s)


def warm_start_params(task: Task | None = None, n_features: int = 3) -> np.ndarray:
    """Proportional go-to-goal controller expressed in the PG feature basis.

    Features are ``(d/10, omega/pi, 1)`` so a gain ``k`` on ``d`` becomes a
    weight ``10 k`` and a gain on ``omega`` in radians becomes ``pi k``.
    Returned as the stacked ``(theta_lin, theta_ang)`` vector.
    """
    theta_lin = np.array([10.0 * GAIN_DISTANCE, 0.0, 0.0])
    theta_ang = np.array([0.0, math.pi * GAIN_ANGLE, 0.0])
    return np.concatenate([theta_lin, theta_ang])


def write_demonstrations(path, store: UserTrajectoryStore) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["traj_id", "step", "state_key", "action"])
        for i, traj in enumerate(store.trajectories):
            for t, (s, a) in enumerate(traj):
                writer.writerow([i, t, ":".join(str(v) for v in s), ActionDiscrete(a).name])


def read_demonstrations(path) -> UserTrajectoryStore:
    trajs = defaultdict(list)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = tuple(int(v) for v in row["state_key"].split(":"))
            trajs[int(row["traj_id"])].append((key, ActionDiscrete[row["action"]]))
    return UserTrajectoryStore([trajs[i] for i in sorted(trajs)])
