"""Kinematic navigation world with friction-dependent slip.

A unicycle robot drives on a flat plane towards a fixed goal. Each task
differs only in its friction pair ``(mu1, mu2)``: ``mu1`` limits the
achievable linear velocity and ``mu2`` the angular velocity.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi
ACTION_LIMIT = 1.5
SUCCESS_REWARD = 100.0
PG_SUCCESS_DISTANCE = 0.55
PG_SUCCESS_ANGLE = 0.2  # radians, compared against |omega|

TRAJECTORY_LOG_HEADER = ("step", "x", "y", "heading", "d", "omega", "v_lin", "v_ang", "reward")


def wrap_angle(theta: float) -> float:
    """Wrap an angle in radians to (-pi, pi]."""
    w = math.remainder(theta, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    return w


def wrap_degrees(omega: float) -> float:
    """Wrap an angle in degrees to (-180, 180]."""
    w = math.remainder(omega, 360.0)
    if w <= -180.0:
        w += 360.0
    return w


def round_half_away(x: float) -> int:
    if x >= 0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


def angle_bucket(deg: float) -> int:
    """Map degrees to [0, 360) and bucket by 12 degree slices (0..30)."""
    return round_half_away(deg % 360.0) // 12


class Pose2D(NamedTuple):
    x: float
    y: float
    heading: float


class ContinuousObs(NamedTuple):
    d: float
    omega: float  # degrees


class DiscreteObs2(NamedTuple):
    d_bucket: int
    omega_bucket: int

    @property
    def key(self) -> tuple:
        return (self.d_bucket, self.omega_bucket)


class DiscreteObs3(NamedTuple):
    d_bucket: int
    beta_bucket: int
    zeta_bucket: int
    # bucket of (beta - zeta); used by the reward, not part of the state key
    omega_bucket: int

    @property
    def key(self) -> tuple:
        return (self.d_bucket, self.beta_bucket, self.zeta_bucket)


class ActionContinuous(NamedTuple):
    v_lin: float
    v_ang: float


class ActionDiscrete(enum.IntEnum):
    FORWARD = 0
    LEFT = 1
    RIGHT = 2


# Forward 0.5 m/s, turns at 1 rad/s.
DISCRETE_COMMANDS = {
    ActionDiscrete.FORWARD: ActionContinuous(0.5, 0.0),
    ActionDiscrete.LEFT: ActionContinuous(0.0, 1.0),
    ActionDiscrete.RIGHT: ActionContinuous(0.0, -1.0),
}


class EpisodeFinishedError(RuntimeError):
    """Raised when stepping a world whose episode already ended."""


@dataclass(frozen=True)
class Task:
    """One navigation MDP, parameterized by its ground friction."""

    task_id: int
    friction: tuple[float, float]
    goal: tuple[float, float] = (0.0, 0.0)
    start_box: tuple[float, float, float, float] = (-3.0, 3.0, -3.0, 3.0)
    exclusion_radius: float = 1.0
    heading_range: tuple[float, float] = (-math.pi, math.pi)
    max_steps: int = 150
    dt: float = 0.1

    def __post_init__(self):
        if self.task_id < 1:
            raise ValueError(f"task_id must be positive, got {self.task_id}")
        if len(self.friction) != 2 or min(self.friction) < 0:
            raise ValueError(f"friction must be a nonnegative pair, got {self.friction}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.exclusion_radius <= 0:
            raise ValueError("the goal must be excluded from the start region")

    @property
    def slip(self) -> tuple[float, float]:
        return slip_factor(self.friction[0]), slip_factor(self.friction[1])


@dataclass
class WorldState:
    pose: Pose2D
    task: Task
    step_count: int = 0
    done: bool = False
    rng_state: dict = field(default_factory=dict, repr=False)


TABLE1_FRICTION = ((100.0, 50.0), (5.0, 5.0), (10.0, 0.1), (0.1, 50.0), (0.2, 0.2))


def make_task_suite() -> list[Task]:
    """The five friction tasks, sharing goal and start region."""
    return [Task(task_id=i + 1, friction=mu) for i, mu in enumerate(TABLE1_FRICTION)]


def get_task(task_id: int) -> Task:
    suite = make_task_suite()
    if not 1 <= task_id <= len(suite):
        raise ValueError(f"task id must be in 1..{len(suite)}, got {task_id}")
    return suite[task_id - 1]


def derive_seed(seed, *parts) -> list[int]:
    """Entropy list for ``numpy.random.default_rng`` built from a seed plus tags."""
    base = [int(v) for v in seed] if isinstance(seed, (list, tuple)) else [int(seed)]
    return base + [int(v) for v in parts]


def slip_factor(mu: float) -> float:
    """Fraction of commanded velocity achieved at friction ``mu``."""
    if mu < 0:
        raise ValueError(f"friction must be nonnegative, got {mu}")
    return mu / (mu + 1.0)


def observe_continuous(pose: Pose2D, goal) -> ContinuousObs:
    vx = goal[0] - pose.x
    vy = goal[1] - pose.y
    d = math.hypot(vx, vy)
    if d == 0.0:
        return ContinuousObs(0.0, 0.0)
    omega = math.degrees(wrap_angle(math.atan2(vy, vx) - pose.heading))
    return ContinuousObs(d, wrap_degrees(omega))


def discretize2(obs: ContinuousObs) -> DiscreteObs2:
    return DiscreteObs2(round_half_away(obs.d), angle_bucket(obs.omega))


def discretize3(pose: Pose2D, goal) -> DiscreteObs3:
    vx = goal[0] - pose.x
    vy = goal[1] - pose.y
    d = math.hypot(vx, vy)
    beta = math.degrees(math.atan2(vy, vx)) if d > 0.0 else math.degrees(pose.heading)
    zeta = math.degrees(pose.heading)
    return DiscreteObs3(
        round_half_away(d), angle_bucket(beta), angle_bucket(zeta), angle_bucket(beta - zeta)
    )


def reward_q(obs) -> float:
    """Sparse discrete reward: 100 inside the goal cell, -1 otherwise."""
    if obs.d_bucket < 1 and obs.omega_bucket < 2:
        return SUCCESS_REWARD
    return -1.0


def reward_pg(obs: ContinuousObs, action: ActionContinuous) -> float:
    if obs.d < PG_SUCCESS_DISTANCE and abs(math.radians(obs.omega)) < PG_SUCCESS_ANGLE:
        return SUCCESS_REWARD
    return -0.5 * abs(action.v_lin)


def clamp_action(a) -> ActionContinuous:
    v, w = a
    return ActionContinuous(
        min(max(v, -ACTION_LIMIT), ACTION_LIMIT), min(max(w, -ACTION_LIMIT), ACTION_LIMIT)
    )


def sample_start(task: Task, rng: np.random.Generator) -> Pose2D:
    x0, x1, y0, y1 = task.start_box
    gx, gy = task.goal
    while True:
        x = rng.uniform(x0, x1)
        y = rng.uniform(y0, y1)
        if math.hypot(x - gx, y - gy) > task.exclusion_radius:
            break
    lo, hi = task.heading_range
    return Pose2D(x, y, wrap_angle(rng.uniform(lo, hi)))


def reset(task: Task, seed) -> WorldState:
    """Fresh episode; identical ``(task, seed)`` gives an identical state."""
    rng = np.random.default_rng(seed)
    pose = sample_start(task, rng)
    return WorldState(pose=pose, task=task, rng_state=rng.bit_generator.state)


def _integrate(world: WorldState, a: ActionContinuous) -> None:
    task = world.task
    if world.done or world.step_count >= task.max_steps:
        raise EpisodeFinishedError("episode already finished; call reset()")
    s_lin, s_ang = task.slip
    v = a.v_lin * s_lin
    w = a.v_ang * s_ang
    x, y, h = world.pose
    dt = task.dt
    world.pose = Pose2D(x + v * math.cos(h) * dt, y + v * math.sin(h) * dt, wrap_angle(h + w * dt))
    world.step_count += 1


def step(world: WorldState, a):
    """Advance one step under a continuous command.

    The world is updated in place and returned for convenience.
    """
    a = clamp_action(a)
    _integrate(world, a)
    obs = observe_continuous(world.pose, world.task.goal)
    r = reward_pg(obs, a)
    world.done = r == SUCCESS_REWARD or world.step_count >= world.task.max_steps
    return world, obs, r, world.done


def step_discrete(world: WorldState, a: ActionDiscrete, state_dim: int = 2):
    _integrate(world, DISCRETE_COMMANDS[ActionDiscrete(a)])
    obs = discrete_obs(world, state_dim)
    r = reward_q(obs)
    world.done = r == SUCCESS_REWARD or world.step_count >= world.task.max_steps
    return world, obs, r, world.done


def discrete_obs(world: WorldState, state_dim: int = 2):
    if state_dim == 2:
        return discretize2(observe_continuous(world.pose, world.task.goal))
    if state_dim == 3:
        return discretize3(world.pose, world.task.goal)
    raise ValueError(f"state_dim must be 2 or 3, got {state_dim}")


def write_trajectory_log(path, rows) -> None:
    """Write per-step rows ``(step, x, y, heading, d, omega, v_lin, v_ang, reward)``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_LOG_HEADER)
        for row in rows:
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
