"""Predictive distributions and holdout evaluation metrics.

All public outputs are on the original data scale when ScalingParams are
supplied; internally everything runs on the model (standardized) scale.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .blocks import StudentTObs, compile_horizon
from .errors import NumericalError, ValidationError
from .mcmc import McmcDraws, holdout_filter_draw
from .state_space import GaussianBelief, simulate_forward

DEFAULT_QUANTILES = (2.5, 50.0, 97.5)


@dataclass
class ForecastDistribution:
    horizon: int
    paths: np.ndarray                     # (n_draws, h), original scale
    quantile_levels: tuple = DEFAULT_QUANTILES

    @property
    def mean(self) -> np.ndarray:
        return self.paths.mean(axis=0)

    @property
    def variance(self) -> np.ndarray:
        return self.paths.var(axis=0, ddof=1)

    def quantiles(self) -> dict[float, np.ndarray]:
        return {q: np.percentile(self.paths, q, axis=0) for q in self.quantile_levels}

    def to_json(self) -> str:
        qs = self.quantiles()
        return json.dumps({
            "horizon": self.horizon,
            "mean": self.mean.tolist(),
            "variance": self.variance.tolist(),
            "quantiles": {str(q): v.tolist() for q, v in qs.items()},
        }, indent=2)


@dataclass
class EvaluationReport:
    mape: float
    cps: dict[int, float]
    cps_actual: dict[int, float]
    residuals: np.ndarray                 # standardized one-step residuals
    coverage_95: float
    pred_mean: np.ndarray                 # original scale
    pred_var: np.ndarray
    # residuals are mean-over-draws predictive means standardized by the
    # total predictive s.d.; recorded so plots can state the convention
    residual_convention: str = "mean-over-draws, total predictive sd"

    def to_json(self) -> str:
        return json.dumps({
            "mape_pct": self.mape,
            "cps": {str(y): v for y, v in self.cps.items()},
            "cps_actual": {str(y): v for y, v in self.cps_actual.items()},
            "coverage_95": self.coverage_95,
            "residuals": self.residuals.tolist(),
            "pred_mean": self.pred_mean.tolist(),
            "pred_var": self.pred_var.tolist(),
            "residual_convention": self.residual_convention,
        }, indent=2)


def mape(actual, predicted) -> float:
    """Mean absolute percentage error, in percent."""
    actual = np.asarray(actual, float)
    predicted = np.asarray(predicted, float)
    if actual.shape != predicted.shape:
        raise ValidationError(f"length mismatch: {actual.shape} vs {predicted.shape}")
    zero = np.flatnonzero(actual == 0)
    if zero.size:
        raise ValidationError(f"MAPE undefined: actual value is 0 at index {zero[0]}")
    return float(100.0 * np.mean(np.abs(actual - predicted) / np.abs(actual)))


def cps(predicted, years, year: int) -> float:
    """Cumulative predicted sales over calendar year `year`."""
    predicted = np.asarray(predicted, float)
    years = np.asarray(years, int)
    if predicted.shape != years.shape:
        raise ValidationError("predicted and year labels must align")
    mask = years == year
    if not mask.any():
        raise ValidationError(f"no steps labeled with year {year}")
    return float(predicted[mask].sum())


def standardized_residuals(actual, pred_mean, pred_var) -> np.ndarray:
    actual = np.asarray(actual, float)
    pred_mean = np.asarray(pred_mean, float)
    pred_var = np.asarray(pred_var, float)
    if np.any(pred_var <= 0):
        raise NumericalError("nonpositive predictive variance in residual computation")
    return (actual - pred_mean) / np.sqrt(pred_var)


def _future_matrix(source: dict | None, names: list[str], h: int, kind: str) -> np.ndarray:
    if not names:
        return np.zeros((h, 0))
    if source is None:
        raise ValidationError(f"future {kind} rows required for {names}")
    cols = []
    for n in names:
        if n not in source:
            raise ValidationError(f"future {kind} series {n!r} missing")
        col = np.asarray(source[n], float)
        if len(col) < h:
            raise ValidationError(f"future {kind} series {n!r} covers {len(col)} steps, "
                                  f"need {h} (missing from step {len(col) + 1})")
        cols.append(col[:h])
    return np.column_stack(cols)


def predictive_sample(draws: McmcDraws, train, h: int, rng: np.random.Generator,
                      u_future: dict | None = None, x_future: dict | None = None,
                      scaling=None, thin: int = 1,
                      quantile_levels=DEFAULT_QUANTILES) -> ForecastDistribution:
    """Sample the h-step predictive distribution by iterating the model
    forward from each stored draw's terminal state.

    u_future/x_future map series names to length-h arrays.  With `scaling`
    they are given in original units and outputs are destandardized;
    otherwise everything stays on the model scale.
    """
    if h < 1:
        raise ValidationError("horizon must be >= 1")
    k = len(draws.channel_names)
    p = len(draws.regressor_names)
    u_fut = _future_matrix(u_future, draws.channel_names, h, "spend")
    x_fut = _future_matrix(x_future, draws.regressor_names, h, "regressor")
    if scaling is not None:
        for j, n in enumerate(draws.channel_names):
            u_fut[:, j] = scaling.apply(f"u_{n}", u_fut[:, j])
        for j, n in enumerate(draws.regressor_names):
            x_fut[:, j] = scaling.apply(f"x_{n}", x_fut[:, j])
    u_prev = np.array([train.channels[c][-1] for c in draws.channel_names]) if k else None
    student = isinstance(draws.spec.observation, StudentTObs)
    nu = draws.spec.observation.nu if student else None

    idx = range(0, draws.n, thin)
    paths = np.zeros((len(list(idx)), h))
    m = draws.terminal_state.shape[1]
    for row, i in enumerate(range(0, draws.n, thin)):
        params = draws.params_at(i)
        lam = None
        if student:
            lam = (0.5 * nu) / rng.gamma(0.5 * nu, size=h)
        sys = compile_horizon(draws.spec, train, params, u_fut, None, u_prev,
                              include_regression=False, lambdas=lam)
        start = GaussianBelief(draws.terminal_state[i], np.zeros((m, m)))
        _, obs = simulate_forward(sys, start, h, rng, fixed_start=True)
        if p:
            obs = obs + x_fut @ params.beta
        paths[row] = obs
    if scaling is not None:
        paths = scaling.invert("sales", paths)
    return ForecastDistribution(h, paths, tuple(quantile_levels))


def one_step_ahead_eval(draws: McmcDraws, train, holdout, scaling=None,
                        actual_original=None, thin: int = 1) -> EvaluationReport:
    """Filter through the holdout per draw (parameters frozen) and report
    MAPE, per-year CPS, standardized residuals and 95% coverage.

    `train`/`holdout` are on the model scale; `actual_original` overrides
    the destandardized holdout sales when the raw series is available.
    """
    if holdout.n_weeks < 1:
        raise ValidationError("holdout must contain at least one week")
    idx = list(range(0, draws.n, thin))
    means = np.zeros((len(idx), holdout.n_weeks))
    varis = np.zeros_like(means)
    for row, i in enumerate(idx):
        means[row], varis[row] = holdout_filter_draw(draws, train, holdout, i)
    pred_mean = means.mean(axis=0)
    pred_var = varis.mean(axis=0) + (means.var(axis=0, ddof=1) if len(idx) > 1 else 0.0)

    if scaling is not None:
        pred_mean = scaling.invert("sales", pred_mean)
        pred_var = pred_var * scaling.scale["sales"] ** 2
        actual = scaling.invert("sales", holdout.sales) if actual_original is None else np.asarray(actual_original, float)
    else:
        actual = np.asarray(holdout.sales, float)

    resid = standardized_residuals(actual, pred_mean, pred_var)
    coverage = float(np.mean(np.abs(resid) <= 1.959963984540054))
    years = holdout.years()
    cps_pred = {int(y): cps(pred_mean, years, int(y)) for y in np.unique(years)}
    cps_act = {int(y): cps(actual, years, int(y)) for y in np.unique(years)}
    return EvaluationReport(
        mape=mape(actual, pred_mean), cps=cps_pred, cps_actual=cps_act,
        residuals=resid, coverage_95=coverage, pred_mean=pred_mean, pred_var=pred_var)
