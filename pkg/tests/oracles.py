"""Reference computations written independently of the package internals."""
import itertools
import math

import numpy as np


def param_vector(policy):
    return np.concatenate([policy.theta_lin, policy.theta_ang, [policy.sigma_lin, policy.sigma_ang]])


def traj_loglik(v, phi, raw):
    """Summed Gaussian log density of raw actions under the stacked vector ``v``."""
    tl, ta, sl, sa = v[0:3], v[3:6], v[6], v[7]
    out = 0.0
    for col, th, s in ((0, tl, sl), (1, ta, sa)):
        mu = phi @ th
        out += np.sum(-0.5 * ((raw[:, col] - mu) / s) ** 2 - math.log(s) - 0.5 * math.log(2 * math.pi))
    return out


def avg_step_return(traj):
    return sum(traj.rewards) / len(traj.rewards)


def fd_scores(v0, batch, h=1e-6):
    """Per-trajectory score vectors by central differences of the log-likelihood."""
    S = np.zeros((len(batch), v0.size))
    for j in range(v0.size):
        e = np.zeros_like(v0)
        e[j] = h
        for i, tr in enumerate(batch):
            S[i, j] = (traj_loglik(v0 + e, tr.phi, tr.raw) - traj_loglik(v0 - e, tr.phi, tr.raw)) / (2 * h)
    return S


def fd_reinforce_gradient(v0, batch, baseline="optimal", h=1e-6):
    """Central differences of the reweighted-return surrogate with frozen noise.

    ``J_j(v) = mean_tau exp(l_tau(v) - l_tau(v0)) (R_tau - b_j)`` where the
    baseline ``b_j`` is held at its value at ``v0``.
    """
    R = np.array([avg_step_return(tr) for tr in batch])
    if baseline == "optimal":
        S = fd_scores(v0, batch, h)
        den = (S**2).sum(axis=0)
        b = np.where(den > 0, (S**2 * R[:, None]).sum(axis=0) / np.where(den > 0, den, 1.0), 0.0)
    else:
        b = np.zeros(v0.size)
    base = np.array([traj_loglik(v0, tr.phi, tr.raw) for tr in batch])

    def J(v, j):
        ll = np.array([traj_loglik(v, tr.phi, tr.raw) for tr in batch])
        return np.mean(np.exp(ll - base) * (R - b[j]))

    g = np.zeros(v0.size)
    for j in range(v0.size):
        e = np.zeros_like(v0)
        e[j] = h
        g[j] = (J(v0 + e, j) - J(v0 - e, j)) / (2 * h)
    return g


def lasso_objective(s, L, G, a, mu):
    r = a - L @ s
    return float(r @ G @ r + mu * np.abs(s).sum())


def lasso_bruteforce(L, G, a, mu):
    """Exact minimizer by enumerating every sign/zero pattern of ``s``.

    For a fixed pattern the objective is a smooth quadratic on the active
    coordinates; its stationary point is a feasible candidate, and the
    true minimizer is the stationary point of its own pattern.
    """
    k = L.shape[1]
    A = L.T @ G @ L
    c = L.T @ G @ a
    best_s, best_f = np.zeros(k), lasso_objective(np.zeros(k), L, G, a, mu)
    for signs in itertools.product((-1, 0, 1), repeat=k):
        act = [j for j in range(k) if signs[j] != 0]
        if not act:
            continue
        sg = np.array([signs[j] for j in act], dtype=float)
        try:
            sa = np.linalg.solve(A[np.ix_(act, act)], c[act] - 0.5 * mu * sg)
        except np.linalg.LinAlgError:
            continue
        s = np.zeros(k)
        s[act] = sa
        f = lasso_objective(s, L, G, a, mu)
        if f < best_f:
            best_s, best_f = s, f
    return best_s, best_f


def basis_objective_grad(L, pairs, lam):
    """Gradient of ``mean_t (a - L s)' G (a - L s) + lam |L|^2`` in L."""
    T = len(pairs)
    g = 2 * lam * L
    for s, G, a in pairs:
        g += -2.0 / T * np.outer(G @ (a - L @ s), s)
    return g


def random_psd(rng, p, ridge=1e-3):
    A = rng.normal(size=(p, p))
    return A @ A.T / p + ridge * np.eye(p)
