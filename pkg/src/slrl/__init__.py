"""Reinforcement learning for robot navigation across friction tasks.

Tabular Q-learning with demonstration mixing, REINFORCE on linear-Gaussian
velocity policies, and online multi-task learning over a shared basis.
"""
from .env import Task, get_task, make_task_suite
from .estimators import PGELLA, QLearner, ReinforceLearner

__all__ = ["Task", "get_task", "make_task_suite", "QLearner", "ReinforceLearner", "PGELLA"]
__version__ = "0.1.0"
