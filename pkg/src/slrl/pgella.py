"""Online multi-task policy learning over a shared latent basis.

Every task's policy parameters are encoded as ``theta_t = L @ s_t`` with a
shared basis ``L`` (p x k) and a sparse code ``s_t``. Tasks arrive one at a
time; each is solved on its own with REINFORCE, then its code is fit by a
Gamma-weighted lasso and the basis is refit in closed form over all tasks
seen so far.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import env
from .demonstrator import warm_start_params
from .policy_gradient import (
    GaussianPolicy,
    PGConfig,
    evaluate_policy,
    rollout,
    train_pg,
    trajectory_score,
)


@dataclass
class EllaConfig:
    k: int = 3
    mu: float = 0.1
    lam: float = 0.01
    trajectories_per_task: int = 50
    hessian_ridge: float = 1e-3
    refresh_passes: int = 1

    def check(self, p: int) -> "EllaConfig":
        if not 1 <= self.k <= p:
            raise ValueError(f"need 1 <= k <= p, got k={self.k}, p={p}")
        if self.mu < 0 or self.lam < 0:
            raise ValueError("mu and lam must be nonnegative")
        if self.hessian_ridge <= 0:
            raise ValueError("hessian_ridge must be positive")
        if self.trajectories_per_task < 0 or self.refresh_passes < 0:
            raise ValueError("trajectories_per_task and refresh_passes must be nonnegative")
        return self


@dataclass
class TaskStats:
    task_id: int
    alpha_star: np.ndarray
    hessian: np.ndarray
    trajectory_count: int
    sigma: tuple[float, float] = (0.3, 0.3)
    curve: list = field(default_factory=list, repr=False)


@dataclass
class TaskCoefficients:
    task_id: int
    s: np.ndarray


class PGDivergenceError(FloatingPointError):
    pass


def estimate_hessian(trajectories, policy: GaussianPolicy, ridge: float) -> np.ndarray:
    """Outer-product (Gauss-Newton) curvature of the log-likelihood, plus a ridge.

    Uses the per-trajectory summed score with respect to the stacked mean
    parameters; the result is PSD by construction.
    """
    p = 2 * policy.dim
    gamma = ridge * np.eye(p)
    if trajectories:
        g = np.array([trajectory_score(tr, policy)[:p] for tr in trajectories])
        gamma += g.T @ g / len(trajectories)
    return 0.5 * (gamma + gamma.T)


def task_solver(task, pg_cfg: PGConfig, ella_cfg: EllaConfig, seed=0, warm_start=None) -> TaskStats:
    policy, curve = train_pg(task, pg_cfg, warm_start, seed)
    alpha = policy.theta
    if not np.all(np.isfinite(alpha)):
        raise PGDivergenceError(f"policy gradient diverged on task {task.task_id}")
    rng = np.random.default_rng(env.derive_seed(seed, 5))
    trajs = [rollout(task, policy, env.derive_seed(seed, 6, i), rng)
             for i in range(ella_cfg.trajectories_per_task)]
    hessian = estimate_hessian(trajs, policy, ella_cfg.hessian_ridge)
    return TaskStats(task.task_id, alpha, hessian, len(trajs), (policy.sigma_lin, policy.sigma_ang), curve)


def soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def solve_coefficients(L: np.ndarray, stats: TaskStats, mu: float, s0=None, tol: float = 1e-8,
                       max_iter: int = 100_000) -> TaskCoefficients:
    """Minimize ``(a - L s)' G (a - L s) + mu |s|_1`` by cyclic coordinate descent."""
    L = np.asarray(L, dtype=float)
    alpha, gamma = stats.alpha_star, stats.hessian
    if L.shape[0] != alpha.shape[0] or gamma.shape != (alpha.size, alpha.size):
        raise ValueError(f"shape mismatch: L {L.shape}, alpha {alpha.shape}, hessian {gamma.shape}")
    A = L.T @ gamma @ L
    c = L.T @ gamma @ alpha
    k = L.shape[1]
    s = np.zeros(k) if s0 is None else np.array(s0, dtype=float)
    for _ in range(max_iter):
        biggest = 0.0
        for j in range(k):
            if A[j, j] <= 0:
                new = 0.0
            else:
                rho = c[j] - A[j] @ s + A[j, j] * s[j]
                new = soft_threshold(rho, mu / 2.0) / A[j, j]
            biggest = max(biggest, abs(new - s[j]))
            s[j] = new
        if biggest < tol:
            break
    return TaskCoefficients(stats.task_id, s)


def task_loss(L, s, stats: TaskStats, mu: float) -> float:
    r = stats.alpha_star - L @ s
    return float(r @ stats.hessian @ r + mu * np.abs(s).sum())


def update_basis(history, lam: float, shape) -> np.ndarray:
    """Closed-form minimizer of ``mean_t (a - L s)' G (a - L s) + lam |L|_F^2``.

    ``history`` is a sequence of ``(TaskCoefficients, TaskStats)``.
    """
    p, k = shape
    T = len(history)
    M = lam * np.eye(p * k)
    rhs = np.zeros(p * k)
    for coeffs, stats in history:
        s = coeffs.s
        M += np.kron(np.outer(s, s), stats.hessian) / T
        rhs += (stats.hessian @ np.outer(stats.alpha_star, s)).ravel(order="F") / T
    if lam == 0 and np.linalg.matrix_rank(M) < p * k:
        raise np.linalg.LinAlgError("basis update is singular; use lam > 0")
    return np.linalg.solve(M, rhs).reshape((p, k), order="F")


def basis_gradient(L, history, lam: float) -> np.ndarray:
    T = len(history)
    grad = 2.0 * lam * L
    for coeffs, stats in history:
        r = stats.alpha_star - L @ coeffs.s
        grad -= 2.0 * np.outer(stats.hessian @ r, coeffs.s) / T
    return grad


def objective(L, coeffs: dict, history: dict, mu: float, lam: float) -> float:
    """Mean per-task fit plus sparsity over tasks seen, plus ``lam |L|_F^2``.

    ``coeffs`` maps task id to code vector and ``history`` maps task id to
    ``TaskStats``.
    """
    if not history:
        raise ValueError("objective needs at least one task")
    fit = sum(task_loss(L, np.asarray(coeffs[t]), history[t], mu) for t in history)
    return fit / len(history) + lam * float(np.sum(L * L))


def reconstruct_policy(L, s, sigma) -> GaussianPolicy:
    theta = np.asarray(L) @ np.asarray(getattr(s, "s", s))
    policy = GaussianPolicy.from_vector(theta, 1.0)
    sig = (sigma, sigma) if np.isscalar(sigma) else tuple(sigma)
    policy.sigma_lin, policy.sigma_ang = float(sig[0]), float(sig[1])
    return policy


class PGELLAState:
    """Mutable learner state for :func:`pgella_train` and the estimator."""

    def __init__(self, p: int, cfg: EllaConfig, seed=0):
        self.cfg = cfg.check(p)
        rng = np.random.default_rng(env.derive_seed(seed, 7))
        self.L = rng.uniform(-0.1, 0.1, size=(p, cfg.k))
        self.coeffs: dict[int, np.ndarray] = {}
        self.stats: dict[int, TaskStats] = {}
        # (label, objective) after every step, grouped per arriving task
        self.trace: list[list[tuple[str, float]]] = []

    def _history(self):
        return [(TaskCoefficients(t, self.coeffs[t]), self.stats[t]) for t in self.stats]

    def objective(self) -> float:
        return objective(self.L, self.coeffs, self.stats, self.cfg.mu, self.cfg.lam)

    def add(self, stats: TaskStats) -> None:
        t = stats.task_id
        self.stats[t] = stats
        prev = self.coeffs.get(t)
        self.coeffs[t] = np.zeros(self.cfg.k) if prev is None else prev
        block = [("arrive", self.objective())]
        self.coeffs[t] = solve_coefficients(self.L, stats, self.cfg.mu, s0=self.coeffs[t]).s
        block.append(("s-step", self.objective()))
        self.L = update_basis(self._history(), self.cfg.lam, self.L.shape)
        block.append(("L-step", self.objective()))
        self.trace.append(block)

    def refresh(self, passes: int = 1) -> None:
        for _ in range(passes):
            block = [("refresh", self.objective())]
            for t in self.stats:
                self.coeffs[t] = solve_coefficients(self.L, self.stats[t], self.cfg.mu, s0=self.coeffs[t]).s
                block.append(("s-step", self.objective()))
            self.L = update_basis(self._history(), self.cfg.lam, self.L.shape)
            block.append(("L-step", self.objective()))
            self.trace.append(block)

    def policy(self, task_id: int) -> GaussianPolicy:
        return reconstruct_policy(self.L, self.coeffs[task_id], self.stats[task_id].sigma)


def pgella_train(task_stream, cfg: EllaConfig, pg_cfg, seed=0, use_demonstrator: bool = True,
                 state: PGELLAState | None = None) -> PGELLAState:
    """Consume tasks in the given order, one at a time.

    ``pg_cfg`` is a single :class:`PGConfig` or a mapping from task id to one.
    Returns the learner state; reconstructed policies come from
    ``state.policy(task_id)``.
    """
    for task in task_stream:
        tcfg = pg_cfg[task.task_id] if isinstance(pg_cfg, dict) else pg_cfg
        if state is None:
            state = PGELLAState(2 * 3, cfg, seed)
        warm = warm_start_params(task) if use_demonstrator else None
        stats = task_solver(task, tcfg, cfg, seed, warm)
        state.add(stats)
    if state is not None and cfg.refresh_passes:
        state.refresh(cfg.refresh_passes)
    return state


def compare_with_single_task(state: PGELLAState, tasks, n_eval: int, seed=0):
    """Rows of ``(task_id, single_task_reward, reconstructed_reward)``.

    Both policies of a task share the evaluation seeds and the task's
    learned exploration noise.
    """
    rows = []
    for task in tasks:
        st = state.stats[task.task_id]
        single = GaussianPolicy.from_vector(st.alpha_star, 1.0)
        single.sigma_lin, single.sigma_ang = st.sigma
        eval_seed = env.derive_seed(seed, 9, task.task_id)
        r_single = evaluate_policy(task, single, n_eval, eval_seed)[0]
        r_recon = evaluate_policy(task, state.policy(task.task_id), n_eval, eval_seed)[0]
        rows.append((task.task_id, r_single, r_recon))
    return rows


def write_model(path, state: PGELLAState) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["block", "a", "b", "value"])
        for i in range(state.L.shape[0]):
            for j in range(state.L.shape[1]):
                writer.writerow(["L", i, j, repr(float(state.L[i, j]))])
        for t in sorted(state.coeffs):
            for j, v in enumerate(state.coeffs[t]):
                writer.writerow(["s", t, j, repr(float(v))])


def read_model(path):
    """Return ``(L, coeffs)`` from a model snapshot."""
    L_entries, s_entries = {}, {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            a, b, v = int(row["a"]), int(row["b"]), float(row["value"])
            if row["block"] == "L":
                L_entries[(a, b)] = v
            elif row["block"] == "s":
                s_entries.setdefault(a, {})[b] = v
            else:
                raise ValueError(f"{path}: unknown block {row['block']!r}")
    p = 1 + max(i for i, _ in L_entries)
    k = 1 + max(j for _, j in L_entries)
    L = np.zeros((p, k))
    for (i, j), v in L_entries.items():
        L[i, j] = v
    coeffs = {t: np.array([d[j] for j in range(k)]) for t, d in s_entries.items()}
    return L, coeffs
