"""Time-varying linear-Gaussian state space: filter, smoother, FFBS, simulation.

The observation is scalar per week.  Missing observations (NaN) make the
filter predict-only at that step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalError, ValidationError

# diffuse prior variance used on the standardized scale instead of exact
# diffuse recursions
DEFAULT_DIFFUSE_VARIANCE = 1e7

SYM_TOL = 1e-10


@dataclass
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, float)
        self.cov = np.asarray(self.cov, float)
        m = self.mean.shape[0]
        if self.cov.shape != (m, m):
            raise ValidationError(f"covariance shape {self.cov.shape} != ({m}, {m})")
        if np.max(np.abs(self.cov - self.cov.T), initial=0.0) > SYM_TOL:
            raise ValidationError("covariance not symmetric within 1e-10")


@dataclass
class StateSpaceSystem:
    """Arrays indexed by t = 0..T-1 for model times 1..T.

    F: (T, m) observation rows; G: (T, m, m) transitions; H: (m, g)
    disturbance loading; W: (T, g, g) state-noise covariances; V: (T,)
    observation variances.
    """

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    W: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        self.F = np.ascontiguousarray(self.F, dtype=float)
        self.G = np.ascontiguousarray(self.G, dtype=float)
        self.H = np.ascontiguousarray(self.H, dtype=float)
        self.V = np.ascontiguousarray(np.asarray(self.V, float))
        T, m = self.F.shape
        g = self.H.shape[1]
        W = np.asarray(self.W, float)
        if W.ndim == 2:
            W = np.broadcast_to(W, (T, g, g)).copy()
        self.W = np.ascontiguousarray(W)
        if self.G.shape != (T, m, m):
            raise ValidationError(f"G shape {self.G.shape} != ({T}, {m}, {m})")
        if self.H.shape != (m, g):
            raise ValidationError(f"H shape {self.H.shape} != ({m}, {g})")
        if self.W.shape != (T, g, g):
            raise ValidationError(f"W shape {self.W.shape} != ({T}, {g}, {g})")
        if self.V.shape != (T,):
            raise ValidationError(f"V shape {self.V.shape} != ({T},)")
        if np.any(self.V < 0):
            raise ValidationError("V must be nonnegative")
        if np.max(np.abs(self.W - np.transpose(self.W, (0, 2, 1))), initial=0.0) > SYM_TOL:
            raise ValidationError("W must be symmetric")

    @property
    def T(self) -> int:
        return self.F.shape[0]

    @property
    def m(self) -> int:
        return self.F.shape[1]

    @property
    def g(self) -> int:
        return self.H.shape[1]

    def state_noise_cov(self) -> np.ndarray:
        """H W_t H' stacked over t, shape (T, m, m)."""
        HW = np.einsum("ij,tjk->tik", self.H, self.W)
        return np.ascontiguousarray(np.einsum("tik,lk->til", HW, self.H))


@dataclass
class FilterResult:
    init: GaussianBelief
    observed: np.ndarray         # (T,) bool
    pred_mean: np.ndarray        # (T, m)
    pred_cov: np.ndarray         # (T, m, m)
    filt_mean: np.ndarray        # (T, m)
    filt_cov: np.ndarray         # (T, m, m)
    y_pred_mean: np.ndarray      # (T,)
    y_pred_var: np.ndarray       # (T,)
    loglik: float

    def to_json(self) -> str:
        return json.dumps({
            "loglik": self.loglik,
            "observed": self.observed.astype(int).tolist(),
            "pred_mean": self.pred_mean.tolist(),
            "filt_mean": self.filt_mean.tolist(),
            "y_pred_mean": self.y_pred_mean.tolist(),
            "y_pred_var": self.y_pred_var.tolist(),
        })


def kalman_filter(sys: StateSpaceSystem, y: np.ndarray, init: GaussianBelief) -> FilterResult:
    """Run the filter over y (NaN entries are treated as missing)."""
    y = np.asarray(y, float)
    if y.shape != (sys.T,):
        raise ValidationError(f"y length {y.shape} != system horizon {sys.T}")
    observed = ~np.isnan(y)
    yc = np.where(observed, y, 0.0)
    am, aP, fm, fP, yhat, S, loglik, fail = kernels.filter_core(
        yc, observed, sys.F, sys.G, sys.state_noise_cov(), sys.V,
        np.ascontiguousarray(init.mean), np.ascontiguousarray(init.cov))
    if fail >= 0:
        raise NumericalError("nonpositive one-step predictive variance", t=fail + 1)
    return FilterResult(init, observed, am, aP, fm, fP, yhat, S, float(loglik))


def kalman_smoother(sys: StateSpaceSystem, fr: FilterResult):
    """Smoothed marginal moments for times 0..T.

    Returns (means (T+1, m), covs (T+1, m, m)); entry T equals the filtered
    belief at T.
    """
    sm, sP = kernels.smoother_core(sys.G, fr.pred_mean, fr.pred_cov,
                                   fr.filt_mean, fr.filt_cov,
                                   np.ascontiguousarray(fr.init.mean),
                                   np.ascontiguousarray(fr.init.cov))
    return sm, sP


def ffbs_sample(sys: StateSpaceSystem, y: np.ndarray, rng: np.random.Generator,
                init: GaussianBelief, fr: FilterResult | None = None) -> np.ndarray:
    """One exact joint draw of the state path theta_{0:T} given y."""
    if fr is None:
        fr = kalman_filter(sys, y, init)
    z = rng.standard_normal((sys.T + 1, sys.m))
    path = kernels.ffbs_core(sys.G, fr.pred_mean, fr.pred_cov,
                             fr.filt_mean, fr.filt_cov,
                             np.ascontiguousarray(init.mean),
                             np.ascontiguousarray(init.cov), z)
    if not np.all(np.isfinite(path)):
        raise NumericalError("FFBS produced non-finite states")
    return path


def simulate_forward(sys: StateSpaceSystem, start: GaussianBelief, steps: int,
                     rng: np.random.Generator, fixed_start: bool = False):
    """Draw states and observations from the model equations.

    The start belief describes theta_0; with fixed_start (or zero start
    covariance) theta_0 equals the mean.  Returns (states (steps, m),
    obs (steps,)) for times 1..steps.
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    if steps > sys.T:
        raise ValidationError(f"steps {steps} exceeds system horizon {sys.T}")
    m, g = sys.m, sys.g
    if fixed_start or not np.any(start.cov):
        theta = start.mean.copy()
    else:
        theta = kernels.draw_mvn(start.mean, start.cov, rng.standard_normal(m))
    states = np.zeros((steps, m))
    obs = np.zeros(steps)
    for t in range(steps):
        eps = kernels.draw_mvn(np.zeros(g), sys.W[t], rng.standard_normal(g))
        theta = sys.G[t] @ theta + sys.H @ eps
        states[t] = theta
        noise = np.sqrt(sys.V[t]) * rng.standard_normal() if sys.V[t] > 0 else 0.0
        obs[t] = sys.F[t] @ theta + noise
    return states, obs
