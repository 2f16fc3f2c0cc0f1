"""Structural blocks and their compilation into a state-space system.

Blocks hold structure (which series they touch, seasonal period, trend
kind); numeric parameter values live in ModelParams so the same spec can be
compiled at every Gibbs iteration with the current draw.

State layout follows block order.  The Nerlove-Arrow block contributes
states [A_t, q_1..q_k]; its transition row implements

    A_t = (1 - delta) * A_{t-1} + sum_i q_i u_{i,t-1}

with u at t-1 read from the previous data row (the first transition reuses
row 0, the documented off-by-one convention).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ValidationError
from .state_space import DEFAULT_DIFFUSE_VARIANCE, GaussianBelief, StateSpaceSystem

# channels whose spend share falls below this default are dropped by config
# helpers (mirrors excluding minor channels like cinema/press)
DEFAULT_SPEND_SHARE_THRESHOLD = 0.01


@dataclass(frozen=True)
class GaussianObs:
    kind: str = "gaussian"


@dataclass(frozen=True)
class StudentTObs:
    nu: float = 5.0
    kind: str = "student_t"

    def __post_init__(self):
        if self.nu <= 1:
            raise ConfigError(f"student-t requires nu > 1 for finite variance, got {self.nu}")


@dataclass(frozen=True)
class NerloveArrowBlock:
    """Goodwill dynamics; channels=None means all dataset channels."""
    channels: tuple[str, ...] | None = None

    def resolve_channels(self, data) -> list[str]:
        if self.channels is None:
            return data.channel_names
        missing = [c for c in self.channels if c not in data.channels]
        if missing:
            raise ConfigError(f"channels {missing} not present in dataset")
        return list(self.channels)


@dataclass(frozen=True)
class TrendBlock:
    kind: str = "local_level"  # or "local_linear"

    def __post_init__(self):
        if self.kind not in ("local_level", "local_linear"):
            raise ConfigError(f"unknown trend kind {self.kind!r}")


@dataclass(frozen=True)
class SeasonalBlock:
    S: int = 52

    def __post_init__(self):
        if self.S < 2:
            raise ConfigError(f"seasonal period must be >= 2, got {self.S}")


@dataclass(frozen=True)
class RegressionBlock:
    """Static regression on ambient series; regressors=None means all."""
    regressors: tuple[str, ...] | None = None

    def resolve_regressors(self, data) -> list[str]:
        if self.regressors is None:
            return data.regressor_names
        missing = [r for r in self.regressors if r not in data.regressors]
        if missing:
            raise ConfigError(f"regressors {missing} not present in dataset")
        return list(self.regressors)


Block = NerloveArrowBlock | TrendBlock | SeasonalBlock | RegressionBlock

VARIANTS = ("B", "RA", "RF")


@dataclass(frozen=True)
class ModelSpec:
    blocks: tuple[Block, ...]
    observation: GaussianObs | StudentTObs = field(default_factory=GaussianObs)
    variant: str = "RF"

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        for cls in (NerloveArrowBlock, TrendBlock, SeasonalBlock, RegressionBlock):
            if sum(isinstance(b, cls) for b in self.blocks) > 1:
                raise ConfigError(f"at most one {cls.__name__} allowed")
        if self.variant == "B" and any(isinstance(b, RegressionBlock) for b in self.blocks):
            raise ConfigError("variant B uses no regression block")

    def validate(self):
        if sum(isinstance(b, NerloveArrowBlock) for b in self.blocks) != 1:
            raise ConfigError("spec requires exactly one NerloveArrowBlock")
        return self

    def block(self, cls):
        for b in self.blocks:
            if isinstance(b, cls):
                return b
        return None

    def to_json(self) -> str:
        out = {"variant": self.variant, "observation": {"family": self.observation.kind},
               "blocks": []}
        if isinstance(self.observation, StudentTObs):
            out["observation"]["nu"] = self.observation.nu
        for b in self.blocks:
            if isinstance(b, NerloveArrowBlock):
                out["blocks"].append({"type": "nerlove_arrow",
                                      "channels": None if b.channels is None else list(b.channels)})
            elif isinstance(b, TrendBlock):
                out["blocks"].append({"type": "trend", "kind": b.kind})
            elif isinstance(b, SeasonalBlock):
                out["blocks"].append({"type": "seasonal", "S": b.S})
            else:
                out["blocks"].append({"type": "regression",
                                      "regressors": None if b.regressors is None else list(b.regressors)})
        return json.dumps(out, indent=2)

    @classmethod
    def from_json(cls, s: str) -> "ModelSpec":
        d = json.loads(s)
        blocks = []
        for b in d["blocks"]:
            t = b["type"]
            if t == "nerlove_arrow":
                ch = b.get("channels")
                blocks.append(NerloveArrowBlock(None if ch is None else tuple(ch)))
            elif t == "trend":
                blocks.append(TrendBlock(b.get("kind", "local_level")))
            elif t == "seasonal":
                blocks.append(SeasonalBlock(b.get("S", 52)))
            elif t == "regression":
                rg = b.get("regressors")
                blocks.append(RegressionBlock(None if rg is None else tuple(rg)))
            else:
                raise ConfigError(f"unknown block type {t!r}")
        fam = d.get("observation", {"family": "gaussian"})
        obs = StudentTObs(fam["nu"]) if fam["family"] == "student_t" else GaussianObs()
        return cls(tuple(blocks), obs, d.get("variant", "RF"))


@dataclass
class ModelParams:
    """One full parameter assignment (a Gibbs draw, or simulation truth)."""

    delta: float = 0.3
    q: np.ndarray = field(default_factory=lambda: np.zeros(0))
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gamma_channels: np.ndarray | None = None   # 0/1 per channel; None = all in
    gamma_beta: np.ndarray | None = None       # 0/1 per ambient regressor
    goodwill_var: float = 0.0
    level_var: float = 0.0
    slope_var: float = 0.0
    seasonal_var: float = 0.0
    obs_var: float = 1.0          # sigma^2_eps (Gaussian) / tau^2 (student-t)
    lambdas: np.ndarray | None = None  # latent per-week scales (student-t)
    # initial latent values, used by simulation
    goodwill0: float = 0.0
    level0: float = 0.0
    slope0: float = 0.0
    seasonal0: np.ndarray | None = None

    def __post_init__(self):
        self.q = np.atleast_1d(np.asarray(self.q, float))
        self.beta = np.atleast_1d(np.asarray(self.beta, float)) if np.size(self.beta) else np.zeros(0)

    def validate(self):
        if not (0.0 <= self.delta <= 1.0):
            raise ValidationError(f"delta must lie in [0, 1], got {self.delta}")
        for name in ("goodwill_var", "level_var", "slope_var", "seasonal_var", "obs_var"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        return self

    def gamma_ch(self, k: int) -> np.ndarray:
        return np.ones(k, int) if self.gamma_channels is None else np.asarray(self.gamma_channels, int)

    def gamma_b(self, p: int) -> np.ndarray:
        return np.ones(p, int) if self.gamma_beta is None else np.asarray(self.gamma_beta, int)


def koyck_step(A_prev: float, delta: float, q, u_prev) -> float:
    """Deterministic goodwill update: (1-delta)*A_prev + q . u_prev."""
    if not (0.0 <= delta <= 1.0):
        raise ValidationError(f"delta must lie in [0, 1], got {delta}")
    q = np.atleast_1d(np.asarray(q, float))
    u_prev = np.atleast_1d(np.asarray(u_prev, float))
    if q.shape != u_prev.shape:
        raise ValidationError(f"q shape {q.shape} != u shape {u_prev.shape}")
    return float((1.0 - delta) * A_prev + q @ u_prev)


def state_layout(spec: ModelSpec, data, include_regression: bool = True) -> dict[str, slice]:
    """Name -> slice of the state vector, in block order."""
    layout = {}
    pos = 0
    for b in spec.blocks:
        if isinstance(b, NerloveArrowBlock):
            k = len(b.resolve_channels(data))
            layout["goodwill"] = slice(pos, pos + 1)
            layout["q"] = slice(pos + 1, pos + 1 + k)
            pos += 1 + k
        elif isinstance(b, TrendBlock):
            d = 2 if b.kind == "local_linear" else 1
            layout["trend"] = slice(pos, pos + d)
            pos += d
        elif isinstance(b, SeasonalBlock):
            layout["seasonal"] = slice(pos, pos + b.S - 1)
            pos += b.S - 1
        elif isinstance(b, RegressionBlock) and include_regression:
            p = len(b.resolve_regressors(data))
            layout["beta"] = slice(pos, pos + p)
            pos += p
    layout["_dim"] = slice(0, pos)
    return layout


def lagged_spend(U: np.ndarray, u_prev: np.ndarray | None = None) -> np.ndarray:
    """u_{t-1} per row; the first row uses u_prev, or reuses row 0 if absent."""
    if U.shape[1] == 0:
        return U
    first = U[:1] if u_prev is None else np.asarray(u_prev, float).reshape(1, -1)
    return np.vstack([first, U[:-1]])


def _assemble(spec: ModelSpec, layout: dict, u_lag: np.ndarray, X: np.ndarray | None,
              params: ModelParams, include_regression: bool,
              lambdas: np.ndarray | None) -> StateSpaceSystem:
    T = max(u_lag.shape[0], X.shape[0] if X is not None else 0)
    m = layout["_dim"].stop
    F = np.zeros((T, m))
    G = np.zeros((T, m, m))
    G[:] = np.eye(m)
    noise_cols = []   # (state_row, variance)

    for b in spec.blocks:
        if isinstance(b, NerloveArrowBlock):
            k = layout["q"].stop - layout["q"].start
            gamma = params.gamma_ch(k)
            i0 = layout["goodwill"].start
            G[:, i0, i0] = 1.0 - params.delta
            G[:, i0, layout["q"]] = u_lag * gamma  # excluded channels: zero columns
            F[:, i0] = 1.0
            noise_cols.append((i0, params.goodwill_var))
        elif isinstance(b, TrendBlock):
            i0 = layout["trend"].start
            F[:, i0] = 1.0
            noise_cols.append((i0, params.level_var))
            if b.kind == "local_linear":
                G[:, i0, i0 + 1] = 1.0
                noise_cols.append((i0 + 1, params.slope_var))
        elif isinstance(b, SeasonalBlock):
            i0 = layout["seasonal"].start
            d = b.S - 1
            G[:, i0:i0 + d, i0:i0 + d] = 0.0
            G[:, i0, i0:i0 + d] = -1.0
            for j in range(1, d):
                G[:, i0 + j, i0 + j - 1] = 1.0
            F[:, i0] = 1.0
            noise_cols.append((i0, params.seasonal_var))
        elif isinstance(b, RegressionBlock) and include_regression:
            p = layout["beta"].stop - layout["beta"].start
            F[:, layout["beta"]] = X * params.gamma_b(p)  # excluded regressors: zero columns

    g = max(len(noise_cols), 1)
    H = np.zeros((m, g))
    Wdiag = np.zeros(g)
    for j, (row, var) in enumerate(noise_cols):
        H[row, j] = 1.0
        Wdiag[j] = var

    V = np.zeros(T)
    if isinstance(spec.observation, StudentTObs):
        lam = lambdas if lambdas is not None else np.ones(T)
        if len(lam) != T:
            raise ValidationError(f"lambdas length {len(lam)} != horizon {T}")
        V[:] = lam * params.obs_var
    else:
        V[:] = params.obs_var
    return StateSpaceSystem(F, G, H, np.diag(Wdiag), V)


def compile_system(spec: ModelSpec, data, params: ModelParams,
                   include_regression: bool = True,
                   u_prev: np.ndarray | None = None) -> StateSpaceSystem:
    """Assemble block-diagonal F/G/H/W/V over the dataset horizon."""
    layout = state_layout(spec, data, include_regression)
    na = spec.block(NerloveArrowBlock)
    if na is not None:
        names = na.resolve_channels(data)
        U = np.column_stack([data.channels[n] for n in names]) if names else np.zeros((data.n_weeks, 0))
    else:
        U = np.zeros((data.n_weeks, 0))
    X = None
    reg = spec.block(RegressionBlock)
    if reg is not None and include_regression:
        names = reg.resolve_regressors(data)
        X = np.column_stack([data.regressors[n] for n in names]) if names else np.zeros((data.n_weeks, 0))
    return _assemble(spec, layout, lagged_spend(U, u_prev), X, params,
                     include_regression, params.lambdas)


def compile_horizon(spec: ModelSpec, data, params: ModelParams,
                    u_future: np.ndarray, x_future: np.ndarray | None,
                    u_prev: np.ndarray | None,
                    include_regression: bool = True,
                    lambdas: np.ndarray | None = None) -> StateSpaceSystem:
    """System over h future steps; `data` supplies the layout (names/dims).

    u_future is (h, k) planned spend; u_prev is the last observed spend row,
    feeding the first transition.
    """
    layout = state_layout(spec, data, include_regression)
    return _assemble(spec, layout, lagged_spend(np.asarray(u_future, float), u_prev),
                     None if x_future is None else np.asarray(x_future, float),
                     params, include_regression, lambdas)


def initial_state(spec: ModelSpec, data, params: ModelParams,
                  include_regression: bool = True) -> GaussianBelief:
    """Point initial state carrying the parameter assignment (simulation use)."""
    layout = state_layout(spec, data, include_regression)
    m = layout["_dim"].stop
    mean = np.zeros(m)
    if "goodwill" in layout:
        mean[layout["goodwill"]] = params.goodwill0
        k = layout["q"].stop - layout["q"].start
        mean[layout["q"]] = params.q * params.gamma_ch(k)
    if "trend" in layout:
        mean[layout["trend"].start] = params.level0
        if layout["trend"].stop - layout["trend"].start == 2:
            mean[layout["trend"].start + 1] = params.slope0
    if "seasonal" in layout:
        d = layout["seasonal"].stop - layout["seasonal"].start
        s0 = params.seasonal0 if params.seasonal0 is not None else np.zeros(d)
        mean[layout["seasonal"]] = s0
    if "beta" in layout:
        p = layout["beta"].stop - layout["beta"].start
        mean[layout["beta"]] = params.beta * params.gamma_b(p)
    return GaussianBelief(mean, np.zeros((m, m)))


def prior_belief(spec: ModelSpec, data, params: ModelParams,
                 include_regression: bool = True,
                 diffuse_var: float = DEFAULT_DIFFUSE_VARIANCE) -> GaussianBelief:
    """Diffuse prior on dynamic states; excluded q coordinates pinned at 0."""
    layout = state_layout(spec, data, include_regression)
    m = layout["_dim"].stop
    mean = np.zeros(m)
    var = np.full(m, diffuse_var)
    if "q" in layout:
        k = layout["q"].stop - layout["q"].start
        var[layout["q"]] = diffuse_var * params.gamma_ch(k)  # gamma=0 -> point mass at 0
    return GaussianBelief(mean, np.diag(var))


def seasonal_pattern_check(block: SeasonalBlock, path: np.ndarray,
                           noise_var: float = 0.0) -> dict:
    """Check the dummy-seasonal identity on a state path.

    path has shape (T, S-1) (rows over time).  The per-step innovation of
    the constraint is s_t[0] + sum(s_{t-1}); with zero noise the effects are
    exactly periodic with period S.
    """
    path = np.asarray(path, float)
    d = block.S - 1
    if path.ndim != 2 or path.shape[1] != d:
        raise ValidationError(f"path must be (T, {d})")
    innov = path[1:, 0] + path[:-1].sum(axis=1)
    implied = -path.sum(axis=1)  # the S-th effect at each time
    max_innov = float(np.max(np.abs(innov), initial=0.0))
    threshold = 3.0 * np.sqrt(noise_var)
    return {
        "max_abs_innovation": max_innov,
        "threshold_3sigma": float(threshold),
        "within_bound": bool(max_innov <= threshold + 1e-12),
        "implied_effect": implied,
    }
