"""Independent brute-force oracles used by the tests.

These deliberately avoid the package's recursions: the state-space oracle
builds the dense joint Gaussian of (theta_0..theta_T, y_1..y_T) and
conditions it directly; the dominance oracle is the O(S^2) pairwise
definition; the grid oracle enumerates the feasible box.
"""

from __future__ import annotations

import numpy as np


def dense_joint(F, G, HWH, V, m0, P0):
    """Mean/covariance of the stacked vector [theta_0..theta_T, y_1..y_T].

    Built from the linear map of the independent sources
    (theta_0, eta_1..eta_T, eps_1..eps_T); no Kalman recursions involved.
    """
    T, m = F.shape
    n_src = (T + 1) * m + T       # theta_0, etas, epsilons
    n_out = (T + 1) * m + T       # states and observations
    L = np.zeros((n_out, n_src))
    mu = np.zeros(n_out)
    S_src = np.zeros((n_src, n_src))
    S_src[:m, :m] = P0
    for t in range(T):
        S_src[m * (t + 1):m * (t + 2), m * (t + 1):m * (t + 2)] = HWH[t]
        S_src[(T + 1) * m + t, (T + 1) * m + t] = V[t]

    # rows of L for theta_t, built recursively as linear maps of the sources
    maps = np.zeros((T + 1, m, n_src))
    maps[0, :, :m] = np.eye(m)
    means = np.zeros((T + 1, m))
    means[0] = m0
    for t in range(T):
        maps[t + 1] = G[t] @ maps[t]
        maps[t + 1][:, m * (t + 1):m * (t + 2)] += np.eye(m)
        means[t + 1] = G[t] @ means[t]
    for t in range(T + 1):
        L[m * t:m * (t + 1)] = maps[t]
        mu[m * t:m * (t + 1)] = means[t]
    for t in range(T):
        row = (T + 1) * m + t
        L[row] = F[t] @ maps[t + 1]
        L[row, (T + 1) * m + t] += 1.0
        mu[row] = F[t] @ means[t + 1]
    cov = L @ S_src @ L.T
    return mu, cov


def _condition(mu, cov, obs_idx, y_obs):
    """Gaussian conditioning on coordinates obs_idx = y_obs (pinv-based)."""
    all_idx = np.arange(len(mu))
    rest = np.setdiff1d(all_idx, obs_idx)
    S_oo = cov[np.ix_(obs_idx, obs_idx)]
    S_ro = cov[np.ix_(rest, obs_idx)]
    S_rr = cov[np.ix_(rest, rest)]
    K = S_ro @ np.linalg.pinv(S_oo)
    mu_c = mu[rest] + K @ (y_obs - mu[obs_idx])
    cov_c = S_rr - K @ S_ro.T
    return rest, mu_c, cov_c


def oracle_moments(F, G, HWH, V, m0, P0, y):
    """Filtered/predicted/smoothed moments and log-likelihood by dense
    conditioning.  y may contain NaN (missing steps)."""
    T, m = F.shape
    mu, cov = dense_joint(F, G, HWH, V, m0, P0)
    nstate = (T + 1) * m
    obs_all = np.flatnonzero(~np.isnan(y))

    pred_mean = np.zeros((T, m))
    pred_cov = np.zeros((T, m, m))
    filt_mean = np.zeros((T, m))
    filt_cov = np.zeros((T, m, m))
    y_mean = np.zeros(T)
    y_var = np.zeros(T)
    loglik = 0.0
    for t in range(T):
        prior_obs = obs_all[obs_all < t]
        oidx = nstate + prior_obs
        rest, mu_c, cov_c = _condition(mu, cov, oidx, y[prior_obs])
        pos = {v: i for i, v in enumerate(rest)}
        sl = [pos[m * (t + 1) + j] for j in range(m)]
        pred_mean[t] = mu_c[sl]
        pred_cov[t] = cov_c[np.ix_(sl, sl)]
        yrow = pos[nstate + t]
        y_mean[t] = mu_c[yrow]
        y_var[t] = cov_c[yrow, yrow]
        if not np.isnan(y[t]):
            e = y[t] - y_mean[t]
            loglik += -0.5 * (np.log(2 * np.pi) + np.log(y_var[t]) + e * e / y_var[t])
            upto = obs_all[obs_all <= t]
        else:
            upto = prior_obs
        rest, mu_c, cov_c = _condition(mu, cov, nstate + upto, y[upto])
        pos = {v: i for i, v in enumerate(rest)}
        sl = [pos[m * (t + 1) + j] for j in range(m)]
        filt_mean[t] = mu_c[sl]
        filt_cov[t] = cov_c[np.ix_(sl, sl)]

    rest, mu_c, cov_c = _condition(mu, cov, nstate + obs_all, y[obs_all])
    pos = {v: i for i, v in enumerate(rest)}
    smooth_mean = np.zeros((T + 1, m))
    smooth_cov = np.zeros((T + 1, m, m))
    for t in range(T + 1):
        sl = [pos[m * t + j] for j in range(m)]
        smooth_mean[t] = mu_c[sl]
        smooth_cov[t] = cov_c[np.ix_(sl, sl)]
    return {"pred_mean": pred_mean, "pred_cov": pred_cov,
            "filt_mean": filt_mean, "filt_cov": filt_cov,
            "y_mean": y_mean, "y_var": y_var, "loglik": loglik,
            "smooth_mean": smooth_mean, "smooth_cov": smooth_cov}


def random_system(rng, T, m, p_missing=0.0, time_varying=True):
    """A random stable-ish system plus observations drawn from it."""
    n = T if time_varying else 1
    F = rng.normal(size=(n, m))
    G = 0.7 * rng.normal(size=(n, m, m)) / np.sqrt(m)
    HWH = np.zeros((n, m, m))
    for t in range(n):
        A = rng.normal(size=(m, m))
        HWH[t] = A @ A.T / m + 0.1 * np.eye(m)
    V = rng.random(n) + 0.2
    if not time_varying:
        F, G, HWH, V = (np.repeat(a, T, axis=0) for a in (F, G, HWH, V))
    m0 = rng.normal(size=m)
    A0 = rng.normal(size=(m, m))
    P0 = A0 @ A0.T / m + 0.1 * np.eye(m)
    # draw y from the joint
    mu, cov = dense_joint(F, G, HWH, V, m0, P0)
    z = rng.standard_normal(len(mu))
    w, v = np.linalg.eigh(cov)
    draw = mu + v @ (np.sqrt(np.maximum(w, 0)) * z)
    y = draw[(T + 1) * m:].copy()
    if p_missing:
        miss = rng.random(T) < p_missing
        if miss.all():
            miss[rng.integers(T)] = False
        y[miss] = np.nan
    return F, G, HWH, V, m0, P0, y


def pairwise_nondominated(strategies):
    """O(S^2) dominance filter straight from the definition."""
    out = []
    for i, (ui, mi, vi) in enumerate(strategies):
        dominated = False
        for j, (uj, mj, vj) in enumerate(strategies):
            if i == j:
                continue
            if mj >= mi and vj <= vi and (mj > mi or vj < vi):
                dominated = True
                break
        if not dominated:
            out.append(strategies[i])
    return out


def grid_search(mm, prob, resolution=200):
    """Exhaustive box grid honoring budget/cap; returns (best_u, best_mean, cloud).

    cloud = (points, means, variances) arrays over every budget-feasible
    grid point (the risk cap only filters the argmax, not the cloud).
    """
    d = len(prob.lo)
    axes = [np.linspace(prob.lo[i], prob.hi[i], resolution) for i in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([g.ravel() for g in mesh])
    b = np.atleast_1d(np.asarray(prob.budget, float))
    if len(b) == 1:
        ok = pts.sum(axis=1) <= b[0] + 1e-12
    else:
        per = d // len(b)
        ok = np.ones(len(pts), bool)
        for w in range(len(b)):
            ok &= pts[:, w * per:(w + 1) * per].sum(axis=1) <= b[w] + 1e-12
    pts = pts[ok]
    means = mm.m_c + pts @ mm.m_q
    varis = (mm.sigma_cc + 2.0 * pts @ mm.sigma_cq
             + np.einsum("ij,jk,ik->i", pts, mm.Sigma_qq, pts) + mm.omega)
    cloud = (pts, means, varis)
    if prob.risk_cap is not None:
        feas = varis <= prob.risk_cap + 1e-12
        if not feas.any():
            return None, -np.inf, cloud
        means_f = np.where(feas, means, -np.inf)
    else:
        means_f = means
    i = int(np.argmax(means_f))
    return pts[i], float(means_f[i]), cloud
