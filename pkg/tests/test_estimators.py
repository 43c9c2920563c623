import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from slrl import PGELLA, QLearner, ReinforceLearner
from slrl.env import Task


def small_task(task_id=2):
    from slrl.env import TABLE1_FRICTION
    return Task(task_id=task_id, friction=TABLE1_FRICTION[task_id - 1], max_steps=40)


def test_get_params_and_clone():
    est = QLearner(alpha=0.3, q0=0.5)
    params = est.get_params()
    assert params["alpha"] == 0.3 and params["q0"] == 0.5
    c = clone(est)
    assert c.get_params() == params and c is not est
    assert est.set_params(alpha=0.2).alpha == 0.2


def test_unfitted_predict_raises():
    with pytest.raises(NotFittedError):
        QLearner().predict([[0, 1]])
    with pytest.raises(NotFittedError):
        ReinforceLearner().predict([[1.0, 0.0]])
    with pytest.raises(NotFittedError):
        PGELLA().transform(np.zeros((1, 6)))


def test_qlearner_fit_predict():
    est = QLearner(episodes=30, q0=0.5, n_demonstrations=3, random_state=1).fit(small_task())
    pred = est.predict([[0, 1], [3, 20]])
    assert pred.shape == (2,) and set(pred) <= {0, 1, 2}
    assert len(est.curve_) == 30 and est.user_policy_ is not None
    with pytest.raises(ValueError):
        est.predict([[0, 1, 2]])
    with pytest.raises(ValueError):
        est.predict([[0.5, 1]])


def test_qlearner_accepts_task_id_and_rejects_junk():
    with pytest.raises(TypeError):
        QLearner(episodes=1).fit("two")
    with pytest.raises(ValueError):
        QLearner(episodes=1).fit(9)
    with pytest.raises(ValueError):
        QLearner(episodes=1, random_state=-2).fit(2)


def test_reinforce_fit_predict():
    est = ReinforceLearner(episodes=5, random_state=0).fit(small_task())
    out = est.predict([[2.0, 30.0], [100.0, 0.0]])
    assert out.shape == (2, 2) and np.all(np.abs(out) <= 1.5)
    assert est.coef_.shape == (6,)
    with pytest.raises(ValueError):
        est.predict([[-1.0, 0.0]])
    with pytest.raises(ValueError):
        ReinforceLearner(warm_start="expert").fit(small_task())


def test_pgella_transform_roundtrip():
    est = PGELLA(episodes=5, trajectories_per_task=3, random_state=0).fit([small_task(2), small_task(1)])
    assert est.components_.shape == (3, 6)
    codes = est.transform(est.components_)
    assert codes.shape == (3, 3)
    back = est.inverse_transform(codes)
    assert back.shape == (3, 6)
    assert est.policy(1).theta.shape == (6,)
    with pytest.raises(KeyError):
        est.policy(5)


def test_pgella_partial_fit_grows_tasks():
    est = PGELLA(episodes=3, trajectories_per_task=2, refresh_passes=0)
    est.partial_fit(small_task(3))
    est.partial_fit(small_task(4))
    assert sorted(est.state_.coeffs) == [3, 4]
