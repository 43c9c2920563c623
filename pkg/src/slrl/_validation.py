"""Input checks shared by the estimator wrappers and the CLI."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from . import env
from .env import Task


def check_task(task) -> Task:
    """Accept a :class:`Task` or a task id in 1..5."""
    if isinstance(task, Task):
        return task
    if isinstance(task, (int, np.integer)) and not isinstance(task, bool):
        return env.get_task(int(task))
    raise TypeError(f"expected a Task or a task id, got {type(task).__name__}")


def check_seed(seed) -> int:
    """Seeds are nonnegative integers; ``None`` means 0."""
    if seed is None:
        return 0
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be a nonnegative integer, got {seed!r}")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return int(seed)


def check_states(X, state_dim: int) -> np.ndarray:
    """Integer bucket rows of width ``state_dim``."""
    X = check_array(X, dtype=None, ensure_2d=True)
    if X.shape[1] != state_dim:
        raise ValueError(f"expected {state_dim} state columns, got {X.shape[1]}")
    if not np.all(np.equal(np.mod(X, 1), 0)):
        raise ValueError("discrete states must be integers")
    return X.astype(int)


def check_observations(X) -> np.ndarray:
    """Continuous ``(d, omega_degrees)`` rows."""
    X = check_array(X, dtype=float)
    if X.shape[1] != 2:
        raise ValueError(f"expected columns (d, omega), got {X.shape[1]} columns")
    if np.any(X[:, 0] < 0):
        raise ValueError("distances must be nonnegative")
    return X


def check_params(X, p: int) -> np.ndarray:
    X = check_array(X, dtype=float)
    if X.shape[1] != p:
        raise ValueError(f"expected {p} policy parameters per row, got {X.shape[1]}")
    return X
