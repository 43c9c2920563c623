"""scikit-learn style wrappers around the functional learners.

Learning happens by interacting with a simulated task, so ``fit`` takes a
task (or task id) instead of an ``(X, y)`` pair. ``predict`` and
``transform`` take ordinary arrays.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import env
from ._validation import check_observations, check_params, check_seed, check_states, check_task
from .demonstrator import UserPolicy, UserTrajectoryStore, estimate_user_policy, warm_start_params
from .env import ContinuousObs
from .pgella import (
    EllaConfig,
    PGELLAState,
    TaskStats,
    solve_coefficients,
    task_solver,
)
from .policy_gradient import PGConfig, evaluate_policy, features, train_pg
from .qlearning import QConfig, greedy, train_q


class QLearner(BaseEstimator):
    """Tabular Q-learning on a discretized navigation task.

    With ``q0 > 0`` the learner mixes in a user policy estimated from
    scripted demonstrations, unless one is passed to :meth:`fit`.
    """

    def __init__(self, alpha=0.1, gamma=0.9, p0=0.2, q0=0.0, decay_period=1000, decay_ratio=0.01,
                 episodes=4000, state_dim=2, n_demonstrations=50, random_state=0):
        self.alpha = alpha
        self.gamma = gamma
        self.p0 = p0
        self.q0 = q0
        self.decay_period = decay_period
        self.decay_ratio = decay_ratio
        self.episodes = episodes
        self.state_dim = state_dim
        self.n_demonstrations = n_demonstrations
        self.random_state = random_state

    def _config(self) -> QConfig:
        return QConfig(self.alpha, self.gamma, self.p0, self.q0, self.decay_period, self.decay_ratio,
                       self.episodes, self.state_dim)

    def fit(self, task, user_policy: UserPolicy | None = None):
        cfg = self._config()
        task = check_task(task)
        seed = check_seed(self.random_state)
        if cfg.q0 > 0 and user_policy is None:
            store = UserTrajectoryStore.collect(task, self.n_demonstrations, seed=seed, state_dim=cfg.state_dim)
            user_policy = estimate_user_policy(store)
        self.user_policy_ = user_policy
        self.table_, self.curve_ = train_q(task, cfg, user_policy if cfg.q0 > 0 else None, seed)
        self.task_ = task
        return self

    def predict(self, X) -> np.ndarray:
        """Greedy action index for each row of state buckets."""
        check_is_fitted(self, "table_")
        X = check_states(X, self.state_dim)
        return np.array([int(greedy(self.table_, tuple(int(v) for v in row))) for row in X])

    def score(self, X=None, y=None) -> float:
        """Mean cumulative reward over the final 500 training episodes."""
        check_is_fitted(self, "curve_")
        return float(np.mean([r.cum_reward for r in self.curve_[-500:]]))


class ReinforceLearner(BaseEstimator):
    """Linear-Gaussian velocity policy trained with episodic REINFORCE.

    ``warm_start="demonstrator"`` runs the demonstrator phase first.
    """

    def __init__(self, alpha_lin=1e-3, alpha_ang=1e-3, gamma=0.9, batch_size=10, episodes=400,
                 sigma0=0.3, sigma_min=0.01, warm_start="demonstrator", random_state=0):
        self.alpha_lin = alpha_lin
        self.alpha_ang = alpha_ang
        self.gamma = gamma
        self.batch_size = batch_size
        self.episodes = episodes
        self.sigma0 = sigma0
        self.sigma_min = sigma_min
        self.warm_start = warm_start
        self.random_state = random_state

    def _config(self) -> PGConfig:
        return PGConfig(alpha_lin=self.alpha_lin, alpha_ang=self.alpha_ang, gamma=self.gamma,
                        batch_size=self.batch_size, episodes=self.episodes, sigma0=self.sigma0,
                        sigma_min=self.sigma_min)

    def _warm(self, task):
        if self.warm_start is None:
            return None
        if isinstance(self.warm_start, str):
            if self.warm_start != "demonstrator":
                raise ValueError(f"warm_start must be 'demonstrator', None or a vector, got {self.warm_start!r}")
            return warm_start_params(task)
        return check_params(np.atleast_2d(self.warm_start), 6)[0]

    def fit(self, task):
        task = check_task(task)
        self.policy_, self.curve_ = train_pg(task, self._config(), self._warm(task), check_seed(self.random_state))
        self.task_ = task
        self.coef_ = self.policy_.theta
        return self

    def predict(self, X) -> np.ndarray:
        """Mean clamped ``(v_lin, v_ang)`` for rows of ``(d, omega_degrees)``."""
        check_is_fitted(self, "policy_")
        X = check_observations(X)
        out = np.empty((len(X), 2))
        for i, (d, omega) in enumerate(X):
            out[i] = env.clamp_action(self.policy_.mean(features(ContinuousObs(d, omega))))
        return out

    def score(self, X=None, y=None, n_episodes: int = 25) -> float:
        check_is_fitted(self, "policy_")
        return evaluate_policy(self.task_, self.policy_, n_episodes, check_seed(self.random_state))[0]


class PGELLA(TransformerMixin, BaseEstimator):
    """Online multi-task policy learner over a shared sparse basis.

    ``components_`` is the basis with shape ``(n_components, n_params)``.
    ``transform`` sparse-codes parameter vectors with unit curvature.
    """

    def __init__(self, n_components=3, mu=0.1, lam=0.01, trajectories_per_task=50, hessian_ridge=1e-3,
                 refresh_passes=1, alpha_lin=1e-3, alpha_ang=1e-3, episodes=400, use_demonstrator=True,
                 random_state=0):
        self.n_components = n_components
        self.mu = mu
        self.lam = lam
        self.trajectories_per_task = trajectories_per_task
        self.hessian_ridge = hessian_ridge
        self.refresh_passes = refresh_passes
        self.alpha_lin = alpha_lin
        self.alpha_ang = alpha_ang
        self.episodes = episodes
        self.use_demonstrator = use_demonstrator
        self.random_state = random_state

    def _ella_config(self) -> EllaConfig:
        return EllaConfig(self.n_components, self.mu, self.lam, self.trajectories_per_task,
                          self.hessian_ridge, self.refresh_passes)

    def partial_fit(self, task):
        """Learn one more task and update the shared basis."""
        task = check_task(task)
        seed = check_seed(self.random_state)
        if not hasattr(self, "state_"):
            self.state_ = PGELLAState(6, self._ella_config(), seed)
        pg_cfg = PGConfig(alpha_lin=self.alpha_lin, alpha_ang=self.alpha_ang, episodes=self.episodes)
        warm = warm_start_params(task) if self.use_demonstrator else None
        self.state_.add(task_solver(task, pg_cfg, self.state_.cfg, seed, warm))
        self.components_ = self.state_.L.T.copy()
        return self

    def fit(self, tasks):
        if hasattr(self, "state_"):
            del self.state_
        for task in tasks:
            self.partial_fit(task)
        check_is_fitted(self, "state_")
        if self.refresh_passes:
            self.state_.refresh(self.refresh_passes)
        self.components_ = self.state_.L.T.copy()
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "components_")
        L = self.components_.T
        X = check_params(X, L.shape[0])
        eye = np.eye(L.shape[0])
        return np.array([solve_coefficients(L, TaskStats(-1, row, eye, 0), self.mu).s for row in X])

    def inverse_transform(self, S) -> np.ndarray:
        check_is_fitted(self, "components_")
        S = check_params(S, self.components_.shape[0])
        return S @ self.components_

    def policy(self, task_id: int):
        check_is_fitted(self, "state_")
        if task_id not in self.state_.coeffs:
            raise KeyError(f"task {task_id} has not been learned")
        return self.state_.policy(task_id)
