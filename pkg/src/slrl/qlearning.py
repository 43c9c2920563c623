"""Tabular Q-learning with random / user-policy / greedy action mixing."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import env
from .curves import CurveRecord
from .demonstrator import MissingDemonstrationsError, UserPolicy
from .env import ActionDiscrete, Task

N_ACTIONS = 3


@dataclass
class QConfig:
    alpha: float = 0.1
    gamma: float = 0.9
    p0: float = 0.2
    q0: float = 0.0
    decay_period: int = 1000
    decay_ratio: float = 0.01
    episodes: int = 4000
    state_dim: int = 2

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not (0 <= self.p0 <= 1 and 0 <= self.q0 <= 1) or self.p0 + self.q0 > 1:
            raise ValueError(f"need p0, q0 in [0, 1] with p0 + q0 <= 1, got {self.p0}, {self.q0}")
        if self.decay_period < 1 or not 0 <= self.decay_ratio <= 1:
            raise ValueError("decay_period must be >= 1 and decay_ratio in [0, 1]")
        if self.episodes < 0:
            raise ValueError("episodes must be nonnegative")
        if self.state_dim not in (2, 3):
            raise ValueError(f"state_dim must be 2 or 3, got {self.state_dim}")


class QTable:
    """Sparse state-action values; unseen pairs read as ``default_value``."""

    def __init__(self, default_value: float = 0.0):
        self.default_value = float(default_value)
        self.values: dict[tuple, list[float]] = {}

    def row(self, s) -> list[float]:
        r = self.values.get(s)
        if r is None:
            r = self.values[s] = [self.default_value] * N_ACTIONS
        return r

    def get(self, s, a) -> float:
        r = self.values.get(s)
        return self.default_value if r is None else r[int(a)]

    def max_value(self, s) -> float:
        r = self.values.get(s)
        return self.default_value if r is None else max(r)

    def __len__(self):
        return len(self.values)

    def copy(self) -> "QTable":
        out = QTable(self.default_value)
        out.values = {k: list(v) for k, v in self.values.items()}
        return out


def q_update(table: QTable, s, a, r: float, s_next, terminal: bool, cfg: QConfig) -> QTable:
    bootstrap = 0.0 if terminal else table.max_value(s_next)
    row = table.row(s)
    a = int(a)
    row[a] = (1.0 - cfg.alpha) * row[a] + cfg.alpha * (r + cfg.gamma * bootstrap)
    return table


def greedy(table: QTable, s) -> ActionDiscrete:
    r = table.values.get(s)
    if r is None:
        return ActionDiscrete.FORWARD
    best = 0
    for i in (1, 2):
        if r[i] > r[best]:
            best = i
    return ActionDiscrete(best)


def select_action(table: QTable, s, p: float, q: float, user: UserPolicy | None, rng) -> ActionDiscrete:
    if p + q > 1 + 1e-12:
        raise ValueError(f"p + q must not exceed 1, got {p} + {q}")
    if q > 0 and (user is None or len(user) == 0):
        raise MissingDemonstrationsError("q > 0 requires a user policy built from demonstrations")
    u = rng.random()
    if u < p:
        return ActionDiscrete(int(rng.integers(N_ACTIONS)))
    if u < p + q:
        return user.action(s)
    return greedy(table, s)


def decay_mixing(p: float, q: float, episode: int, cfg: QConfig) -> tuple[float, float]:
    """Shrink ``p`` and ``q`` by ``decay_ratio`` once every ``decay_period`` episodes."""
    if episode > 0 and episode % cfg.decay_period == 0:
        keep = 1.0 - cfg.decay_ratio
        return p * keep, q * keep
    return p, q


def start_seed(seed, episode: int) -> list[int]:
    # shared by every learner so paired runs see the same start states
    return [int(seed), 0, int(episode)]


def run_episode(world, table, p, q, user, rng, cfg: QConfig, learn=True):
    s = env.discrete_obs(world, cfg.state_dim).key
    total = 0.0
    while True:
        a = select_action(table, s, p, q, user, rng)
        _, obs, r, done = env.step_discrete(world, a, cfg.state_dim)
        s_next = obs.key
        total += r
        success = r == env.SUCCESS_REWARD
        if learn:
            q_update(table, s, a, r, s_next, success, cfg)
        s = s_next
        if done:
            steps = world.step_count if success else world.task.max_steps
            return total, steps


def train_q(task: Task, cfg: QConfig, user: UserPolicy | None = None, seed=0, table: QTable | None = None):
    """Run ``cfg.episodes`` episodes and return ``(table, curve)``."""
    if cfg.q0 > 0 and user is None:
        raise MissingDemonstrationsError("q0 > 0 requires a user policy")
    table = QTable() if table is None else table
    rng = np.random.default_rng([int(seed), 1])
    p, q = cfg.p0, cfg.q0
    curve = []
    for episode in range(1, cfg.episodes + 1):
        world = env.reset(task, start_seed(seed, episode))
        total, steps = run_episode(world, table, p, q, user, rng, cfg)
        curve.append(CurveRecord(episode, task.task_id, int(seed), total, steps))
        p, q = decay_mixing(p, q, episode, cfg)
    return table, curve


def state_key_str(s) -> str:
    return ":".join(str(v) for v in s)


def write_qtable(path, table: QTable) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["state_key", "action", "value"])
        for s in sorted(table.values):
            for a in ActionDiscrete:
                writer.writerow([state_key_str(s), a.name, repr(table.values[s][a])])


def read_qtable(path, default_value: float = 0.0) -> QTable:
    table = QTable(default_value)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            s = tuple(int(v) for v in row["state_key"].split(":"))
            table.row(s)[ActionDiscrete[row["action"]]] = float(row["value"])
    return table
