import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slrl import env
from slrl.env import ActionDiscrete, ContinuousObs, DiscreteObs2, Pose2D, Task

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
headings = st.floats(-math.pi, math.pi, allow_nan=False)


def world_at(task, pose):
    w = env.reset(task, 0)
    w.pose = pose
    return w


def full_slip_task(**kw):
    # friction -> infinity is not representable; 1e12 gives slip 1 to double precision
    return Task(task_id=1, friction=(1e12, 1e12), **kw)


@pytest.mark.parametrize(
    "pose, goal, expected",
    [
        (Pose2D(0, 0, 0), (1, 0), (1.0, 0.0)),
        (Pose2D(0, 0, 0), (0, 2), (2.0, 90.0)),
        (Pose2D(0, 0, 0), (3, 4), (5.0, math.degrees(math.atan2(4, 3)))),
    ],
)
def test_observe_continuous(pose, goal, expected):
    obs = env.observe_continuous(pose, goal)
    assert obs.d == pytest.approx(expected[0])
    assert obs.omega == pytest.approx(expected[1])


def test_observe_345_value():
    assert env.observe_continuous(Pose2D(0, 0, 0), (3, 4)).omega == pytest.approx(53.130, abs=1e-3)


def test_observe_at_goal_is_zero():
    assert env.observe_continuous(Pose2D(1.0, 2.0, 0.7), (1.0, 2.0)) == (0.0, 0.0)


@pytest.mark.parametrize(
    "obs, expected",
    [
        (ContinuousObs(0.4, 0.0), (0, 0)),
        (ContinuousObs(3.4, 53.13), (3, 4)),
        (ContinuousObs(1.0, -90.0), (1, 22)),
        (ContinuousObs(2.5, 0.0), (3, 0)),  # half rounds away from zero
        (ContinuousObs(0.0, 179.9), (0, 15)),
        (ContinuousObs(0.0, -0.2), (0, 30)),  # 359.8 rounds to 360 -> bucket 30
    ],
)
def test_discretize2(obs, expected):
    assert tuple(env.discretize2(obs)) == expected


@pytest.mark.parametrize(
    "pose, goal, expected",
    [
        (Pose2D(0, 0, 0), (1, 0), (1, 0, 0)),
        (Pose2D(0, 0, math.pi / 2), (0, 2), (2, 7, 7)),
    ],
)
def test_discretize3(pose, goal, expected):
    assert env.discretize3(pose, goal).key == expected


def test_discretize3_omega_matches_2d_on_random_poses():
    rng = np.random.default_rng(123)
    for _ in range(10_000):
        pose = Pose2D(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-math.pi, math.pi))
        b2 = env.discretize2(env.observe_continuous(pose, (0.0, 0.0))).omega_bucket
        assert env.discretize3(pose, (0.0, 0.0)).omega_bucket == b2


@given(finite, finite, headings)
def test_discretize3_bucket_bounds(x, y, h):
    obs = env.discretize3(Pose2D(x, y, h), (0.0, 0.0))
    beta = math.degrees(math.atan2(-y, -x)) if (x, y) != (0, 0) else math.degrees(h)
    r = env.round_half_away(beta % 360.0)
    assert obs.beta_bucket * 12 <= r < obs.beta_bucket * 12 + 12
    assert 0 <= obs.beta_bucket <= 30 and 0 <= obs.zeta_bucket <= 30


@given(finite, finite, headings, finite, finite)
def test_omega_always_wrapped(x, y, h, gx, gy):
    obs = env.observe_continuous(Pose2D(x, y, h), (gx, gy))
    assert -180.0 < obs.omega <= 180.0
    assert obs.d >= 0


@pytest.mark.parametrize("mu, expected", [(0, 0.0), (100, 100 / 101), (5, 5 / 6)])
def test_slip_factor(mu, expected):
    assert env.slip_factor(mu) == pytest.approx(expected, rel=1e-12)


def test_slip_factor_values():
    assert env.slip_factor(100) == pytest.approx(0.990099, abs=1e-6)
    assert env.slip_factor(5) == pytest.approx(0.8333, abs=1e-4)


def test_slip_factor_rejects_negative():
    with pytest.raises(ValueError):
        env.slip_factor(-0.1)


@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_slip_monotone(a, b):
    lo, hi = sorted((a, b))
    assert env.slip_factor(lo) <= env.slip_factor(hi) < 1.0


def test_step_straight_line():
    w = world_at(full_slip_task(), Pose2D(2.0, 2.0, 0.0))
    env.step(w, (1.0, 0.0))
    assert w.pose.x == pytest.approx(2.1)
    assert w.pose.y == pytest.approx(2.0)
    assert w.pose.heading == 0.0
    assert w.step_count == 1


def test_step_zero_friction_does_not_move():
    task = Task(task_id=1, friction=(0.0, 0.0))
    w = env.reset(task, 3)
    start = w.pose
    for a in [(1.5, 1.5), (-1.0, 0.3), (9.0, -9.0)]:
        env.step(w, a)
    assert w.pose == start


def test_step_turn_with_slip():
    task = Task(task_id=1, friction=(100.0, 100.0))
    w = world_at(task, Pose2D(2.0, 2.0, 0.0))
    env.step(w, (0.0, 1.0))
    assert w.pose.heading == pytest.approx(0.0990099, abs=1e-7)
    assert (w.pose.x, w.pose.y) == (2.0, 2.0)


def test_step_clamps_action():
    w = world_at(full_slip_task(), Pose2D(2.0, 2.0, 0.0))
    env.step(w, (10.0, 0.0))
    assert w.pose.x == pytest.approx(2.0 + 1.5 * 0.1)


def test_step_after_done_raises():
    task = Task(task_id=1, friction=(1.0, 1.0), max_steps=2)
    w = env.reset(task, 0)
    env.step(w, (0, 0))
    _, _, _, done = env.step(w, (0, 0))
    assert done
    with pytest.raises(env.EpisodeFinishedError):
        env.step(w, (0, 0))


def test_step_discrete_forward():
    w = world_at(full_slip_task(), Pose2D(2.0, 2.0, 0.0))
    env.step_discrete(w, ActionDiscrete.FORWARD)
    assert w.pose.x == pytest.approx(2.05)


@pytest.mark.parametrize("a", [ActionDiscrete.LEFT, ActionDiscrete.RIGHT])
def test_step_discrete_turns_do_not_translate(a):
    w = world_at(env.get_task(2), Pose2D(2.0, -1.0, 0.3))
    for _ in range(5):
        env.step_discrete(w, a)
    assert (w.pose.x, w.pose.y) == (2.0, -1.0)


def test_step_discrete_right_heading():
    task = Task(task_id=1, friction=(50.0, 50.0))
    w = world_at(task, Pose2D(2.0, 2.0, 0.0))
    env.step_discrete(w, ActionDiscrete.RIGHT)
    assert w.pose.heading == pytest.approx(-0.098039, abs=1e-6)


@pytest.mark.parametrize("buckets, expected", [((0, 1), 100.0), ((3, 0), -1.0), ((0, 2), -1.0)])
def test_reward_q(buckets, expected):
    assert env.reward_q(DiscreteObs2(*buckets)) == expected


def test_reward_q_uses_3d_omega_bucket():
    assert env.reward_q(env.DiscreteObs3(0, 20, 20, 0)) == 100.0
    assert env.reward_q(env.DiscreteObs3(0, 0, 0, 5)) == -1.0


@pytest.mark.parametrize(
    "obs, a, expected",
    [
        (ContinuousObs(0.5, 0.0), (1.0, 1.0), 100.0),
        (ContinuousObs(2.0, 0.0), (1.0, 0.0), -0.5),
        (ContinuousObs(2.0, 0.0), (0.0, 1.0), 0.0),
        (ContinuousObs(0.5, 12.0), (0.0, 0.0), 0.0),  # 12 degrees > 0.2 rad
        (ContinuousObs(0.5, -11.0), (0.0, 0.0), 100.0),
    ],
)
def test_reward_pg(obs, a, expected):
    assert env.reward_pg(obs, env.ActionContinuous(*a)) == expected


@given(st.floats(0, 20), st.floats(-180, 180), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_reward_pg_range(d, omega, v, w):
    r = env.reward_pg(ContinuousObs(d, omega), env.ActionContinuous(v, w))
    assert r == 100.0 or -0.75 <= r <= 0.0


def test_task_suite():
    suite = env.make_task_suite()
    assert len(suite) == 5
    assert suite[0].friction == (100, 50)
    assert suite[2].friction == (10, 0.1)
    assert [t.friction for t in suite] == [(100, 50), (5, 5), (10, 0.1), (0.1, 50), (0.2, 0.2)]
    assert len({(t.goal, t.start_box) for t in suite}) == 1


@pytest.mark.parametrize("kw", [dict(friction=(-1, 1)), dict(max_steps=0), dict(dt=0.0),
                                dict(exclusion_radius=0.0), dict(task_id=0)])
def test_task_validation(kw):
    base = dict(task_id=1, friction=(1.0, 1.0))
    base.update(kw)
    with pytest.raises(ValueError):
        Task(**base)


def test_reset_determinism():
    t = env.get_task(2)
    a, b = env.reset(t, 7), env.reset(t, 7)
    assert a.pose == b.pose and a.step_count == 0
    assert env.reset(t, 8).pose != a.pose


def test_reset_respects_start_region():
    t = env.get_task(1)
    for seed in range(300):
        p = env.reset(t, seed).pose
        assert -3 <= p.x <= 3 and -3 <= p.y <= 3
        assert math.hypot(p.x, p.y) > t.exclusion_radius
        assert -math.pi < p.heading <= math.pi


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=20))
def test_episode_determinism(seed, actions):
    t = env.get_task(3)

    def run():
        w = env.reset(t, seed)
        out = []
        for a in actions:
            _, obs, r, done = env.step(w, a)
            out.append((obs, r))
            if done:
                break
        return out

    assert run() == run()


@given(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), st.sampled_from(env.make_task_suite()))
def test_executed_velocity_bound(a, task):
    w = world_at(task, Pose2D(2.0, 2.0, 0.0))
    env.step(w, a)
    moved = math.hypot(w.pose.x - 2.0, w.pose.y - 2.0) / task.dt
    assert moved <= 1.5 * task.slip[0] + 1e-9
    assert abs(w.pose.heading) / task.dt <= 1.5 * task.slip[1] + 1e-9


def test_wrap_helpers():
    assert env.wrap_angle(math.pi) == pytest.approx(math.pi)
    assert env.wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert env.wrap_degrees(-180.0) == 180.0
    assert env.wrap_degrees(540.0) == 180.0


def test_trajectory_log(tmp_path):
    path = tmp_path / "traj.csv"
    env.write_trajectory_log(path, [(1, 0.1, 0.2, 0.3, 1.0, 5.0, 0.5, 0.0, -0.25)])
    lines = path.read_text().splitlines()
    assert lines[0] == "step,x,y,heading,d,omega,v_lin,v_ang,reward"
    assert lines[1].startswith("1,0.1,0.2")
