"""Weekly sales panel: loading, validation, scaling, splitting and simulation.

CSV schema: header ``date,sales,u_<name>...,x_<name>...`` with ISO dates,
one row per week.  Sales may be NaN outside the training range (the filter
treats those steps as predict-only); channel spends must be nonnegative.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import SchemaError, ValidationError


def _is_binary(x: np.ndarray) -> bool:
    vals = np.unique(x[~np.isnan(x)])
    return vals.size <= 2 and np.all(np.isin(vals, (0.0, 1.0)))


@dataclass(frozen=True)
class Dataset:
    """Aligned weekly series: sales, per-channel spends and ambient regressors."""

    week_start: np.ndarray                 # datetime64[D], shape (T,)
    sales: np.ndarray                      # float64, NaN = missing observation
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    regressors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        T = len(self.week_start)
        # single-row datasets arise as 1-week holdout slices
        if T < 1:
            raise ValidationError("dataset is empty")
        if len(self.sales) != T:
            raise ValidationError("sales length does not match week_start")
        diffs = np.diff(self.week_start).astype("timedelta64[D]").astype(int)
        if np.any(diffs != 7):
            bad = int(np.argmax(diffs != 7))
            raise ValidationError(f"week_start must increase in 7-day steps; violated after row {bad}")
        for name, u in self.channels.items():
            if len(u) != T:
                raise ValidationError(f"channel {name!r} length != {T}")
            neg = np.where(u < 0)[0]
            if neg.size:
                raise ValidationError(f"negative spend in channel {name!r} at row {neg[0]}")
            if np.all(u == 0):
                warnings.warn(f"channel {name!r} is identically zero; its coefficient is unidentifiable")
        for name, x in self.regressors.items():
            if len(x) != T:
                raise ValidationError(f"regressor {name!r} length != {T}")

    @property
    def n_weeks(self) -> int:
        return len(self.week_start)

    @property
    def channel_names(self) -> list[str]:
        return list(self.channels)

    @property
    def regressor_names(self) -> list[str]:
        return list(self.regressors)

    def channel_matrix(self) -> np.ndarray:
        """Spends stacked as (T, k); k may be 0."""
        if not self.channels:
            return np.zeros((self.n_weeks, 0))
        return np.column_stack([self.channels[n] for n in self.channels])

    def regressor_matrix(self) -> np.ndarray:
        if not self.regressors:
            return np.zeros((self.n_weeks, 0))
        return np.column_stack([self.regressors[n] for n in self.regressors])

    def years(self) -> np.ndarray:
        """Calendar year of each week's start date."""
        return self.week_start.astype("datetime64[Y]").astype(int) + 1970

    def replace(self, **kw) -> "Dataset":
        d = {"week_start": self.week_start, "sales": self.sales,
             "channels": dict(self.channels), "regressors": dict(self.regressors)}
        d.update(kw)
        return Dataset(**d)


@dataclass(frozen=True)
class ScalingParams:
    """Per-series affine transform: standardized = (raw - location) / scale.

    Scale uses the n-1 sample standard deviation.  Series flagged
    ``standardized=False`` (binary event flags, constant series) are passed
    through with location 0 / scale 1.
    """

    location: dict[str, float]
    scale: dict[str, float]
    standardized: dict[str, bool]

    def apply(self, name: str, x: np.ndarray) -> np.ndarray:
        return (x - self.location[name]) / self.scale[name]

    def invert(self, name: str, z: np.ndarray) -> np.ndarray:
        return z * self.scale[name] + self.location[name]

    def to_json(self) -> str:
        return json.dumps({"location": self.location, "scale": self.scale,
                           "standardized": self.standardized}, indent=2)

    @classmethod
    def from_json(cls, s: str) -> "ScalingParams":
        d = json.loads(s)
        return cls(d["location"], d["scale"], d["standardized"])


@dataclass(frozen=True)
class SplitSpec:
    """Contiguous train/holdout split: first `train_end_index` rows train."""

    train_end_index: int


def load_csv(path) -> Dataset:
    """Parse and validate the weekly panel CSV."""
    df = pd.read_csv(path, float_precision="round_trip")
    cols = list(df.columns)
    if "date" not in cols or "sales" not in cols:
        raise SchemaError(f"header must contain 'date' and 'sales' columns, got {cols}")
    extra = [c for c in cols if c not in ("date", "sales")
             and not c.startswith("u_") and not c.startswith("x_")]
    if extra:
        raise SchemaError(f"unrecognized columns {extra}; channels need 'u_' prefix, regressors 'x_'")
    try:
        weeks = pd.to_datetime(df["date"], format="%Y-%m-%d").values.astype("datetime64[D]")
    except (ValueError, TypeError) as e:
        raise ValidationError(f"bad date column: {e}") from e
    channels = {c[2:]: df[c].to_numpy(float) for c in cols if c.startswith("u_")}
    regressors = {c[2:]: df[c].to_numpy(float) for c in cols if c.startswith("x_")}
    return Dataset(weeks, df["sales"].to_numpy(float), channels, regressors)


def write_csv(d: Dataset, path) -> None:
    """Inverse of load_csv; column order is date, sales, channels, regressors."""
    out = {"date": np.datetime_as_string(d.week_start, unit="D"), "sales": d.sales}
    for n, u in d.channels.items():
        out[f"u_{n}"] = u
    for n, x in d.regressors.items():
        out[f"x_{n}"] = x
    pd.DataFrame(out).to_csv(path, index=False, float_format="%.17g")


def standardize(d: Dataset) -> tuple[Dataset, ScalingParams]:
    """Zero-mean unit-variance scaling of sales and continuous series.

    Binary 0/1 series and constant series are left untouched and flagged.
    """
    if d.n_weeks < 2:
        raise ValidationError("need T >= 2 to standardize")
    loc, scl, flag = {}, {}, {}

    def fit(name, x):
        obs = x[~np.isnan(x)]
        if obs.size < 2:
            raise ValidationError(f"series {name!r} has fewer than 2 observed values")
        sd = float(np.std(obs, ddof=1))
        if name != "sales" and _is_binary(x):
            loc[name], scl[name], flag[name] = 0.0, 1.0, False
        elif sd == 0.0:
            loc[name], scl[name], flag[name] = 0.0, 1.0, False
        elif name.startswith("u_"):
            # spends are scaled but not centered: keeps them nonnegative and
            # zero spend meaning zero goodwill inflow
            loc[name], scl[name], flag[name] = 0.0, sd, True
        else:
            loc[name], scl[name], flag[name] = float(np.mean(obs)), sd, True
        return (x - loc[name]) / scl[name]

    sales = fit("sales", d.sales)
    channels = {n: fit(f"u_{n}", u) for n, u in d.channels.items()}
    regressors = {n: fit(f"x_{n}", x) for n, x in d.regressors.items()}
    params = ScalingParams(loc, scl, flag)
    return d.replace(sales=sales, channels=channels, regressors=regressors), params


def destandardize(d: Dataset, params: ScalingParams) -> Dataset:
    sales = params.invert("sales", d.sales)
    channels = {n: params.invert(f"u_{n}", u) for n, u in d.channels.items()}
    regressors = {n: params.invert(f"x_{n}", x) for n, x in d.regressors.items()}
    return d.replace(sales=sales, channels=channels, regressors=regressors)


def split(d: Dataset, s: SplitSpec) -> tuple[Dataset, Dataset]:
    """Split into (train, holdout); concatenation reproduces the input."""
    i = s.train_end_index
    if not (2 <= i <= d.n_weeks - 1):
        raise ValidationError(f"train_end_index must lie in [2, {d.n_weeks - 1}], got {i}")

    def take(sl):
        return Dataset(d.week_start[sl], d.sales[sl],
                       {n: u[sl] for n, u in d.channels.items()},
                       {n: x[sl] for n, x in d.regressors.items()})

    return take(slice(0, i)), take(slice(i, None))


def concatenate(a: Dataset, b: Dataset) -> Dataset:
    return Dataset(np.concatenate([a.week_start, b.week_start]),
                   np.concatenate([a.sales, b.sales]),
                   {n: np.concatenate([a.channels[n], b.channels[n]]) for n in a.channels},
                   {n: np.concatenate([a.regressors[n], b.regressors[n]]) for n in a.regressors})


def simulate_dataset(spec, true_params, investments: dict[str, np.ndarray],
                     regressors: dict[str, np.ndarray], seed: int,
                     start="2011-01-03") -> tuple[Dataset, dict]:
    """Forward-simulate sales from known parameters.

    Returns the dataset plus the full latent record (state path per block)
    so recovery tests can compare against ground truth.  Identical seeds
    give bit-identical output.
    """
    from . import blocks  # circular at import time only

    names = list(investments)
    T = len(next(iter(investments.values()))) if investments else len(next(iter(regressors.values())))
    weeks = np.datetime64(start, "D") + 7 * np.arange(T)
    d = Dataset(weeks, np.full(T, np.nan),
                {n: np.asarray(investments[n], float) for n in names},
                {n: np.asarray(regressors[n], float) for n in regressors})

    spec.validate()
    true_params.validate()
    sys = blocks.compile_system(spec, d, true_params)
    rng = np.random.default_rng(seed)

    from .state_space import simulate_forward, GaussianBelief
    m = sys.m
    theta0 = blocks.initial_state(spec, d, true_params).mean
    states, obs = simulate_forward(sys, GaussianBelief(theta0, np.zeros((m, m))), T, rng,
                                   fixed_start=True)
    layout = blocks.state_layout(spec, d)
    latents = {name: states[:, sl] for name, sl in layout.items() if not name.startswith("_")}
    latents["theta"] = states
    return d.replace(sales=obs), latents
