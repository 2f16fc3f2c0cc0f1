"""Three-step Gibbs sampler: FFBS states, structural parameters, spike-slab.

Each iteration draws
  1. the latent state path (goodwill + q, trend, seasonal) by FFBS with the
     regression contribution subtracted from the observations,
  2. the forgetting rate by random-walk Metropolis on the logit scale and
     the structural variances from conjugate inverse-gamma conditionals
     (plus latent t-scales when the observation family is student-t),
  3. the regression coefficients, inclusion indicators and residual
     variance from the spike-and-slab conditional; when channel inclusion
     is free (any channel pi < 1) the channel coefficients and indicators
     are redrawn from the goodwill transition regression.

Chains own independent random streams; (seed, chains, K, burn_in) fully
determine every draw.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy import stats

from . import dataset as ds
from .blocks import (ModelParams, ModelSpec, NerloveArrowBlock, RegressionBlock,
                     SeasonalBlock, StudentTObs, TrendBlock, compile_horizon,
                     compile_system, prior_belief, state_layout)
from .errors import ConfigError, NumericalError, ValidationError
from .priors import PriorSet, SpikeSlabPrior
from .state_space import GaussianBelief, kalman_filter, ffbs_sample

RIDGE = 1e-8


@dataclass
class McmcDraws:
    """Post-burn-in draws of one chain.

    Coefficient columns are ordered channels first, then ambient
    regressors; exact zeros coincide with excluded indicators.
    """

    spec: ModelSpec
    channel_names: list[str]
    regressor_names: list[str]
    layout: dict                      # reduced state layout (no regression block)
    K: int
    burn_in: int
    chain_id: int
    seed: int
    theta: np.ndarray                 # (n, T+1, m) sampled state paths
    delta: np.ndarray                 # (n,)
    q: np.ndarray                     # (n, k)
    gamma_channels: np.ndarray        # (n, k)
    beta: np.ndarray                  # (n, p)
    gamma_beta: np.ndarray            # (n, p)
    obs_var: np.ndarray               # (n,) sigma^2_eps or tau^2
    goodwill_var: np.ndarray
    level_var: np.ndarray
    slope_var: np.ndarray
    seasonal_var: np.ndarray
    lambdas: np.ndarray | None        # (n, T) latent t-scales
    delta_accept_rate: float

    @property
    def n(self) -> int:
        return len(self.delta)

    @property
    def coef(self) -> np.ndarray:
        """(n, k+p) combined coefficient draws (q then beta)."""
        return np.hstack([self.q, self.beta])

    @property
    def gamma(self) -> np.ndarray:
        return np.hstack([self.gamma_channels, self.gamma_beta])

    @property
    def coef_names(self) -> list[str]:
        return [f"u_{c}" for c in self.channel_names] + [f"x_{r}" for r in self.regressor_names]

    @property
    def terminal_state(self) -> np.ndarray:
        return self.theta[:, -1, :]

    def params_at(self, i: int) -> ModelParams:
        return ModelParams(
            delta=float(self.delta[i]), q=self.q[i],
            beta=self.beta[i] if self.beta.shape[1] else np.zeros(0),
            gamma_channels=self.gamma_channels[i], gamma_beta=self.gamma_beta[i],
            goodwill_var=float(self.goodwill_var[i]), level_var=float(self.level_var[i]),
            slope_var=float(self.slope_var[i]), seasonal_var=float(self.seasonal_var[i]),
            obs_var=float(self.obs_var[i]),
        )


def sample_latent_scales(e: np.ndarray, nu: float, tau2: float,
                         rng: np.random.Generator) -> np.ndarray:
    """Inverse-gamma draw of the per-observation t scale-mixture variances."""
    if nu <= 1:
        raise ConfigError(f"student-t requires nu > 1 for finite variance, got {nu}")
    if tau2 <= 0:
        raise ValidationError("tau2 must be positive")
    e = np.asarray(e, float)
    shape = 0.5 * (nu + 1.0)
    scale = 0.5 * (nu + e * e / tau2)
    return scale / rng.gamma(shape, size=e.shape)


def sample_delta(delta: float, A: np.ndarray, drive: np.ndarray, goodwill_var: float,
                 prior, rng: np.random.Generator, scale: float) -> tuple[float, bool]:
    """Metropolis step on logit(delta) targeting the goodwill transition density."""
    if prior.family == "point":
        return prior.value, False
    if scale == 0.0 or goodwill_var <= 0.0 or not (0.0 < delta < 1.0):
        return delta, False

    def loglik(d):
        e = A[1:] - (1.0 - d) * A[:-1] - drive
        return -0.5 * float(e @ e) / goodwill_var

    x = np.log(delta) - np.log1p(-delta)
    xp = x + scale * rng.standard_normal()
    dp = 1.0 / (1.0 + np.exp(-xp))
    if not (0.0 < dp < 1.0):  # proposal underflowed to the boundary
        return delta, False
    logr = (loglik(dp) - loglik(delta) + prior.logpdf(dp) - prior.logpdf(delta)
            + np.log(dp * (1.0 - dp)) - np.log(delta * (1.0 - delta)))
    if np.log(rng.random()) < logr:
        return float(dp), True
    return delta, False


def sample_spike_slab(r: np.ndarray, X: np.ndarray, prior: SpikeSlabPrior,
                      rng: np.random.Generator, weights: np.ndarray | None = None,
                      sigma2: float | None = None,
                      gamma_init: np.ndarray | None = None):
    """Joint (beta, gamma, sigma^2) draw under the spike-and-slab prior.

    gamma is updated by single-site conditional draws in random order,
    marginalizing beta (and sigma^2 unless it is supplied).  Returns
    (beta, gamma, sigma2) with beta_i = 0 exactly when gamma_i = 0.
    """
    r = np.asarray(r, float)
    n = len(r)
    p = X.shape[1] if X.ndim == 2 else 0
    if p != prior.p:
        raise ConfigError(f"design has {p} columns but prior has {prior.p} coordinates")
    w = np.ones(n) if weights is None else np.asarray(weights, float)
    rw = r * w
    rtWr = float(r @ rw)
    a0, b0 = prior.sigma_shape, prior.sigma_scale

    if p == 0:
        if sigma2 is None:
            sigma2 = float((b0 + 0.5 * rtWr) / rng.gamma(a0 + 0.5 * n))
        return np.zeros(0), np.zeros(0, int), sigma2

    XtWX = X.T @ (X * w[:, None])
    XtWr = X.T @ rw
    Omega_base = prior.kappa * (X.T @ X) / n

    def attempt(Omega):
        gamma = np.zeros(p, int)
        if gamma_init is not None:
            gamma[:] = np.asarray(gamma_init, int)
        gamma[prior.pi >= 1.0] = 1
        gamma[prior.pi <= 0.0] = 0

        logpi = np.log(np.clip(prior.pi, 1e-300, 1.0))
        log1mpi = np.log(np.clip(1.0 - prior.pi, 1e-300, 1.0))

        def logscore(g):
            idx = np.flatnonzero(g)
            prior_term = float(logpi[idx].sum() + log1mpi[np.flatnonzero(g == 0)].sum())
            if idx.size == 0:
                quad = 0.0
                halves = 0.0
            else:
                Om = Omega[np.ix_(idx, idx)]
                Phi = XtWX[np.ix_(idx, idx)] + Om
                Lo = sla.cholesky(Om, lower=True)
                Lp = sla.cholesky(Phi, lower=True)
                bt = sla.cho_solve((Lp, True), XtWr[idx])
                quad = float(bt @ XtWr[idx])
                halves = float(np.sum(np.log(np.diag(Lo))) - np.sum(np.log(np.diag(Lp))))
            if sigma2 is None:
                return prior_term + halves - (a0 + 0.5 * n) * np.log(b0 + 0.5 * (rtWr - quad))
            return prior_term + halves + 0.5 * quad / sigma2

        free = np.flatnonzero((prior.pi > 0.0) & (prior.pi < 1.0))
        for i in rng.permutation(free):
            g0 = gamma.copy(); g0[i] = 0
            g1 = gamma.copy(); g1[i] = 1
            diff = logscore(g1) - logscore(g0)
            p1 = 1.0 / (1.0 + np.exp(-diff)) if diff > -700 else 0.0
            gamma[i] = 1 if rng.random() < p1 else 0

        idx = np.flatnonzero(gamma)
        beta = np.zeros(p)
        if idx.size:
            Phi = XtWX[np.ix_(idx, idx)] + Omega[np.ix_(idx, idx)]
            Lp = sla.cholesky(Phi, lower=True)
            bt = sla.cho_solve((Lp, True), XtWr[idx])
            quad = float(bt @ XtWr[idx])
        else:
            bt = np.zeros(0)
            quad = 0.0
        s2 = sigma2
        if s2 is None:
            ssr = max(rtWr - quad, 0.0)
            s2 = float((b0 + 0.5 * ssr) / rng.gamma(a0 + 0.5 * n))
        if idx.size:
            z = rng.standard_normal(idx.size)
            beta[idx] = bt + np.sqrt(s2) * sla.solve_triangular(Lp, z, lower=True, trans="T")
        return beta, gamma, float(s2)

    try:
        return attempt(Omega_base)
    except np.linalg.LinAlgError:
        try:
            return attempt(Omega_base + RIDGE * np.eye(p))
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"singular spike-and-slab information matrix: {e}") from e


@dataclass
class _ChainState:
    params: ModelParams
    gamma_ch: np.ndarray
    gamma_beta: np.ndarray
    mh_scale: float = 0.5
    accepts: int = 0
    proposals: int = 0


def _check_spike_prior(prior: SpikeSlabPrior, k: int, p: int):
    if prior.p != k + p:
        raise ConfigError(f"spike-slab prior has {prior.p} coordinates, model needs {k + p} "
                          f"({k} channels + {p} regressors)")


def gibbs_run(spec: ModelSpec, data, priors: PriorSet, chains: int = 4,
              K: int = 4000, burn_in: int = 2000, seed: int = 0,
              fixed: dict | None = None) -> list[McmcDraws]:
    """Run `chains` independent Gibbs chains; returns one McmcDraws per chain.

    `fixed` pins parameters at point-mass values (keys: delta, q, beta,
    gamma_channels, gamma_beta, goodwill_var, level_var, slope_var,
    seasonal_var, obs_var); pinned parameters are never resampled.
    """
    if chains < 1 or K < 1 or not (0 <= burn_in < K):
        raise ConfigError(f"bad MCMC sizes: chains={chains}, K={K}, burn_in={burn_in}")
    spec.validate()
    root = np.random.SeedSequence(seed)
    streams = root.spawn(chains)
    return [_run_chain(spec, data, priors, K, burn_in, np.random.default_rng(streams[c]),
                       c, seed, fixed or {}) for c in range(chains)]


def _run_chain(spec: ModelSpec, data, priors: PriorSet, K: int, burn_in: int,
               rng: np.random.Generator, chain_id: int, seed: int,
               fixed: dict) -> McmcDraws:
    y = np.asarray(data.sales, float)
    if np.any(np.isnan(y)):
        raise ValidationError("missing sales in the training range")
    T = len(y)

    na = spec.block(NerloveArrowBlock)
    ch_names = na.resolve_channels(data)
    k = len(ch_names)
    U = data.channel_matrix()[:, [data.channel_names.index(c) for c in ch_names]] \
        if k else np.zeros((T, 0))
    u_lag = np.vstack([U[:1], U[:-1]]) if k else U

    reg = spec.block(RegressionBlock)
    if reg is not None:
        reg_names = reg.resolve_regressors(data)
        X = np.column_stack([data.regressors[n] for n in reg_names]) if reg_names else np.zeros((T, 0))
    else:
        reg_names = []
        X = np.zeros((T, 0))
    p = len(reg_names)

    _check_spike_prior(priors.spike_slab, k, p)
    pi_ch = priors.spike_slab.pi[:k]
    pi_beta = priors.spike_slab.pi[k:]
    prior_beta = dataclasses.replace(priors.spike_slab, pi=pi_beta) if p else None
    prior_ch = dataclasses.replace(priors.spike_slab, pi=pi_ch) if k else None
    free_channels = k > 0 and bool(np.any((pi_ch > 0) & (pi_ch < 1)))

    layout = state_layout(spec, data, include_regression=False)
    student = isinstance(spec.observation, StudentTObs)
    nu = spec.observation.nu if student else None
    has_trend = spec.block(TrendBlock) is not None
    linear_trend = has_trend and spec.block(TrendBlock).kind == "local_linear"
    seas = spec.block(SeasonalBlock)

    def fx(name, default):
        return fixed[name] if name in fixed else default

    st = _ChainState(
        params=ModelParams(
            delta=fx("delta", priors.delta.value if priors.delta.family == "point" else 0.5),
            q=fx("q", np.zeros(k)),
            beta=fx("beta", np.zeros(p)),
            gamma_channels=fx("gamma_channels", (rng.random(k) < pi_ch).astype(int) | (pi_ch >= 1.0).astype(int)),
            gamma_beta=fx("gamma_beta", (rng.random(p) < pi_beta).astype(int) | (pi_beta >= 1.0).astype(int)),
            goodwill_var=fx("goodwill_var", float(np.exp(rng.normal(np.log(0.1), 0.5)))),
            level_var=fx("level_var", float(np.exp(rng.normal(np.log(0.1), 0.5))) if has_trend else 0.0),
            slope_var=fx("slope_var", 0.01 if linear_trend else 0.0),
            seasonal_var=fx("seasonal_var", 0.01 if seas is not None else 0.0),
            obs_var=fx("obs_var", float(np.exp(rng.normal(np.log(0.5), 0.5)))),
            lambdas=np.ones(T) if student else None,
        ),
        gamma_ch=None, gamma_beta=None,
    )
    st.gamma_ch = np.asarray(st.params.gamma_channels, int)
    st.gamma_beta = np.asarray(st.params.gamma_beta, int)

    n_keep = K - burn_in
    m = layout["_dim"].stop
    rec = {
        "theta": np.zeros((n_keep, T + 1, m)),
        "delta": np.zeros(n_keep), "q": np.zeros((n_keep, k)),
        "gamma_channels": np.zeros((n_keep, k), int),
        "beta": np.zeros((n_keep, p)), "gamma_beta": np.zeros((n_keep, p), int),
        "obs_var": np.zeros(n_keep), "goodwill_var": np.zeros(n_keep),
        "level_var": np.zeros(n_keep), "slope_var": np.zeros(n_keep),
        "seasonal_var": np.zeros(n_keep),
        "lambdas": np.zeros((n_keep, T)) if student else None,
    }

    Asl = layout["goodwill"].start
    qsl = layout["q"]

    for it in range(K):
        pr = st.params
        # --- step 1: FFBS ---
        beta_full = pr.beta * st.gamma_beta if p else np.zeros(0)
        y_adj = y - X @ beta_full if p else y
        sys = compile_system(spec, data, pr, include_regression=False)
        init = prior_belief(spec, data, pr, include_regression=False)
        if "q" in fixed:
            init.mean[qsl] = fixed["q"]
            init.cov[qsl, qsl] = 0.0
        try:
            fr = kalman_filter(sys, y_adj, init)
            # --- delta: collapsed Metropolis step (states marginalized) ---
            # The path-conditional update has an absorbing degenerate mode:
            # once the sampled goodwill path is memoryless, delta -> 1 and
            # goodwill_var -> 0 lock each other in.  Accepting against the
            # filter's marginal likelihood targets the same posterior and
            # cannot see that trap.
            if ("delta" not in fixed and priors.delta.family != "point"
                    and 0.0 < pr.delta < 1.0):
                x = np.log(pr.delta) - np.log1p(-pr.delta)
                xp = x + st.mh_scale * rng.standard_normal()
                dp = 1.0 / (1.0 + np.exp(-xp))
                st.proposals += 1
                accepted = False
                if 0.0 < dp < 1.0:
                    pr_prop = dataclasses.replace(pr, delta=float(dp))
                    sys_prop = compile_system(spec, data, pr_prop,
                                              include_regression=False)
                    fr_prop = kalman_filter(sys_prop, y_adj, init)
                    logr = (fr_prop.loglik - fr.loglik
                            + priors.delta.logpdf(dp) - priors.delta.logpdf(pr.delta)
                            + np.log(dp * (1.0 - dp))
                            - np.log(pr.delta * (1.0 - pr.delta)))
                    if np.log(rng.random()) < logr:
                        pr.delta = float(dp)
                        sys, fr = sys_prop, fr_prop
                        accepted = True
                st.accepts += int(accepted)
                if it < burn_in:  # adapt toward 20-50% acceptance
                    st.mh_scale *= float(np.exp(0.05 * (int(accepted) - 0.35)))
            path = ffbs_sample(sys, y_adj, rng, init, fr)
        except NumericalError as e:
            raise NumericalError(f"chain {chain_id} aborted at iteration {it}: {e}") from e
        A = path[:, Asl]
        q_cur = path[-1, qsl] if k else np.zeros(0)
        pr.q = q_cur

        # --- step 2: structural variances (+ latent scales) ---
        drive = u_lag @ (q_cur * st.gamma_ch) if k else np.zeros(T)
        eA = A[1:] - (1.0 - pr.delta) * A[:-1] - drive
        if "goodwill_var" not in fixed:
            pr.goodwill_var = priors.variances.goodwill.draw(rng, 0.5 * T, 0.5 * float(eA @ eA))
        if has_trend and "level_var" not in fixed:
            lvl = path[:, layout["trend"].start]
            if linear_trend:
                slp = path[:, layout["trend"].start + 1]
                e_lvl = lvl[1:] - lvl[:-1] - slp[:-1]
                e_slp = slp[1:] - slp[:-1]
                if "slope_var" not in fixed:
                    pr.slope_var = priors.variances.slope.draw(rng, 0.5 * T, 0.5 * float(e_slp @ e_slp))
            else:
                e_lvl = lvl[1:] - lvl[:-1]
            pr.level_var = priors.variances.level.draw(rng, 0.5 * T, 0.5 * float(e_lvl @ e_lvl))
        if seas is not None and "seasonal_var" not in fixed:
            s = path[:, layout["seasonal"]]
            e_seas = s[1:, 0] + s[:-1].sum(axis=1)
            pr.seasonal_var = priors.variances.seasonal.draw(rng, 0.5 * T, 0.5 * float(e_seas @ e_seas))

        obs_states = np.einsum("ti,ti->t", sys.F, path[1:])
        r = y - obs_states  # target for the regression step
        weights = None
        if student:
            e_obs = r - (X @ beta_full if p else 0.0)
            pr.lambdas = sample_latent_scales(e_obs, nu, pr.obs_var, rng)
            if "obs_var" not in fixed:
                pr.obs_var = priors.variances.observation.draw(
                    rng, 0.5 * T, 0.5 * float(e_obs @ (e_obs / pr.lambdas)))
            weights = 1.0 / pr.lambdas

        # --- step 3: spike-and-slab ---
        if p and not ("beta" in fixed and "gamma_beta" in fixed):
            beta_new, gamma_new, s2 = sample_spike_slab(
                r, X, prior_beta, rng, weights=weights,
                sigma2=pr.obs_var if (student or "obs_var" in fixed) else None,
                gamma_init=st.gamma_beta)
            if "beta" not in fixed:
                pr.beta = beta_new
            if "gamma_beta" not in fixed:
                st.gamma_beta = gamma_new
                pr.gamma_beta = gamma_new
            if not student and "obs_var" not in fixed:
                pr.obs_var = s2
        elif not student and "obs_var" not in fixed:
            _, _, pr.obs_var = sample_spike_slab(
                r - (X @ beta_full if p else 0.0), np.zeros((T, 0)),
                SpikeSlabPrior(np.zeros(0), priors.spike_slab.kappa,
                               priors.spike_slab.sigma_shape, priors.spike_slab.sigma_scale),
                rng)

        if free_channels and not ("q" in fixed and "gamma_channels" in fixed):
            dA = A[1:] - (1.0 - pr.delta) * A[:-1]
            q_new, gch_new, _ = sample_spike_slab(dA, u_lag, prior_ch, rng,
                                                  sigma2=max(pr.goodwill_var, 1e-12),
                                                  gamma_init=st.gamma_ch)
            if "q" not in fixed:
                pr.q = q_new
            if "gamma_channels" not in fixed:
                st.gamma_ch = gch_new
                pr.gamma_channels = gch_new

        for name in ("goodwill_var", "level_var", "slope_var", "seasonal_var", "obs_var"):
            v = getattr(pr, name)
            if not np.isfinite(v) or v > 1e12:
                raise NumericalError(f"divergent {name} draw in chain {chain_id}", t=it)

        if it >= burn_in:
            j = it - burn_in
            rec["theta"][j] = path
            rec["delta"][j] = pr.delta
            if k:
                rec["q"][j] = pr.q * st.gamma_ch
                rec["gamma_channels"][j] = st.gamma_ch
            if p:
                rec["beta"][j] = pr.beta * st.gamma_beta
                rec["gamma_beta"][j] = st.gamma_beta
            rec["obs_var"][j] = pr.obs_var
            rec["goodwill_var"][j] = pr.goodwill_var
            rec["level_var"][j] = pr.level_var
            rec["slope_var"][j] = pr.slope_var
            rec["seasonal_var"][j] = pr.seasonal_var
            if student:
                rec["lambdas"][j] = pr.lambdas

    return McmcDraws(
        spec=spec, channel_names=ch_names, regressor_names=reg_names, layout=layout,
        K=K, burn_in=burn_in, chain_id=chain_id, seed=seed,
        theta=rec["theta"], delta=rec["delta"], q=rec["q"],
        gamma_channels=rec["gamma_channels"], beta=rec["beta"], gamma_beta=rec["gamma_beta"],
        obs_var=rec["obs_var"], goodwill_var=rec["goodwill_var"], level_var=rec["level_var"],
        slope_var=rec["slope_var"], seasonal_var=rec["seasonal_var"], lambdas=rec["lambdas"],
        delta_accept_rate=st.accepts / max(st.proposals, 1),
    )


def merge_chains(chains: list[McmcDraws]) -> McmcDraws:
    """Concatenate post-burn-in draws of several chains (for summaries)."""
    c0 = chains[0]
    cat = lambda name: np.concatenate([getattr(c, name) for c in chains])
    return dataclasses.replace(
        c0, theta=cat("theta"), delta=cat("delta"), q=cat("q"),
        gamma_channels=cat("gamma_channels"), beta=cat("beta"), gamma_beta=cat("gamma_beta"),
        obs_var=cat("obs_var"), goodwill_var=cat("goodwill_var"), level_var=cat("level_var"),
        slope_var=cat("slope_var"), seasonal_var=cat("seasonal_var"),
        lambdas=None if c0.lambdas is None else cat("lambdas"),
        delta_accept_rate=float(np.mean([c.delta_accept_rate for c in chains])),
    )


def holdout_filter_draw(draws: McmcDraws, train, hold, i: int):
    """One-step-ahead predictive means/variances through the holdout for draw i.

    Parameters are frozen at the draw; states continue from the draw's
    terminal state.  Returns (pred_mean, pred_var) on the model scale,
    including the regression contribution in the mean.
    """
    spec = draws.spec
    params = draws.params_at(i)
    k = len(draws.channel_names)
    p = len(draws.regressor_names)
    u_fut = np.column_stack([hold.channels[c] for c in draws.channel_names]) if k else np.zeros((hold.n_weeks, 0))
    u_prev = np.array([train.channels[c][-1] for c in draws.channel_names]) if k else None
    X_fut = np.column_stack([hold.regressors[n] for n in draws.regressor_names]) if p else np.zeros((hold.n_weeks, 0))

    if isinstance(spec.observation, StudentTObs):
        nuv = spec.observation.nu
        v_eff = params.obs_var * (nuv / (nuv - 2.0)) if nuv > 2 else params.obs_var * 3.0
        params = dataclasses.replace(params, obs_var=v_eff)
    sys = compile_horizon(spec, train, params, u_fut, None, u_prev, include_regression=False)
    start = GaussianBelief(draws.terminal_state[i],
                           np.zeros((draws.terminal_state.shape[1],) * 2))
    reg_part = X_fut @ (params.beta if p else np.zeros(0)) if p else 0.0
    y_adj = hold.sales - reg_part if p else np.asarray(hold.sales, float)
    fr = kalman_filter(sys, y_adj, start)
    mean = fr.y_pred_mean + (reg_part if p else 0.0)
    return mean, fr.y_pred_var.copy()


def estimate_nu(spec: ModelSpec, data, priors: PriorSet,
                grid=(3.0, 5.0, 10.0, 30.0), val_fraction: float = 0.25,
                K: int = 600, burn_in: int = 300, seed: int = 0,
                thin: int = 10) -> float:
    """Empirical-Bayes grid choice of the t degrees of freedom.

    Fits each candidate on the head of the sample and scores mean one-step
    predictive log density on the tail; returns the grid maximizer.
    """
    grid = list(grid)
    if not grid:
        raise ConfigError("empty nu grid")
    if any(g <= 1 for g in grid):
        raise ConfigError("all grid values must exceed 1")
    if len(grid) == 1:
        return float(grid[0])
    cut = int(round(data.n_weeks * (1.0 - val_fraction)))
    cut = min(max(cut, 2), data.n_weeks - 1)
    train, val = ds.split(data, ds.SplitSpec(cut))
    best, best_score = None, -np.inf
    for g in grid:
        spec_g = dataclasses.replace(spec, observation=StudentTObs(float(g)))
        draws = gibbs_run(spec_g, train, priors, chains=1, K=K, burn_in=burn_in, seed=seed)[0]
        dens = []
        for i in range(0, draws.n, thin):
            mean, var = holdout_filter_draw(draws, train, val, i)
            tau2 = draws.obs_var[i]
            v_eff = tau2 * (g / (g - 2.0)) if g > 2 else 3.0 * tau2
            state_var = np.maximum(var - v_eff, 0.0)
            scale = np.sqrt(state_var + tau2)
            dens.append(stats.t.pdf(val.sales, df=g, loc=mean, scale=scale))
        score = float(np.mean(np.log(np.maximum(np.mean(dens, axis=0), 1e-300))))
        if score > best_score:
            best, best_score = float(g), score
    return best
