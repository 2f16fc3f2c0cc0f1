"""Command-line entry points: fit, forecast, allocate, diagnose, simulate, serve.

Exit codes: 0 success, 1 hard failure, 2 input/config error, 3 fit finished
but some R-hat exceeded 1.1 (artifacts are still written).  Failures print a
machine-readable JSON object {"code", "message"} to stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
import pandas as pd

from . import artifacts
from . import dataset as ds
from .allocator import (AllocationProblem, default_risk_grid, pareto_sweep,
                        reduce_moments, solve_risk_constrained)
from .blocks import ModelParams, ModelSpec, NerloveArrowBlock, RegressionBlock
from .diagnostics import RHAT_BAR, diagnostic_report, report_to_json
from .errors import ConfigError, GoodwillError, SchemaError, ValidationError
from .forecast import one_step_ahead_eval, predictive_sample
from .mcmc import gibbs_run, merge_chains
from .priors import default_priors

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_RHAT = 3


def _fail(err: Exception) -> int:
    code = type(err).__name__
    click.echo(json.dumps({"code": code, "message": str(err)}), err=True)
    if isinstance(err, (ConfigError, ValidationError, SchemaError)):
        return EXIT_INPUT
    return EXIT_FAILURE


def _read_future_csv(path) -> tuple[dict, dict, int]:
    """future-rows CSV: optional date column plus u_/x_ series."""
    df = pd.read_csv(path)
    u = {c[2:]: df[c].to_numpy(float) for c in df.columns if c.startswith("u_")}
    x = {c[2:]: df[c].to_numpy(float) for c in df.columns if c.startswith("x_")}
    bad = [c for c in df.columns if c != "date" and not c.startswith(("u_", "x_"))]
    if bad:
        raise SchemaError(f"unrecognized future columns {bad}; use 'u_'/'x_' prefixes")
    return u, x, len(df)


def _load_model(model_dir):
    out = Path(model_dir)
    if not (out / "manifest.json").exists():
        raise SchemaError(f"no fitted model found under {out}")
    chains, priors, scaling, manifest = artifacts.load_run(out)
    train = ds.load_csv(out / "train.csv")
    return chains, merge_chains(chains), priors, scaling, manifest, train


def _emit(payload: str, out: str | None):
    if out:
        Path(out).write_text(payload)
    else:
        click.echo(payload)


@click.group()
def main():
    """Bayesian goodwill-model toolkit."""


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--config", required=True, type=click.Path(exists=True))
@click.option("--priors", "priors_path", type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@click.option("--chains", default=4, show_default=True, type=int)
@click.option("--iters", default=4000, show_default=True, type=int)
@click.option("--burnin", default=2000, show_default=True, type=int)
@click.option("--holdout", default=0, show_default=True, type=int,
              help="weeks held out from the end for one-step evaluation")
@click.option("--expected-size", default=5.0, show_default=True, type=float)
def fit(data, config, priors_path, seed, out, chains, iters, burnin, holdout,
        expected_size):
    """Standardize, fit by Gibbs sampling, and write run artifacts."""
    try:
        spec = ModelSpec.from_json(Path(config).read_text()).validate()
        raw = ds.load_csv(data)
        std, scaling = ds.standardize(raw)
        if holdout:
            if not (0 < holdout < std.n_weeks - 2):
                raise ValidationError(f"holdout must lie in (0, {std.n_weeks - 2})")
            train, hold = ds.split(std, ds.SplitSpec(std.n_weeks - holdout))
        else:
            train, hold = std, None

        k = len(spec.block(NerloveArrowBlock).resolve_channels(train))
        reg = spec.block(RegressionBlock)
        p = len(reg.resolve_regressors(train)) if reg else 0
        if priors_path:
            prior_set = artifacts.priors_from_json(Path(priors_path).read_text())
        else:
            prior_set = default_priors(spec.variant, k, p, expected_size)

        draws = gibbs_run(spec, train, prior_set, chains=chains, K=iters,
                          burn_in=burnin, seed=seed)
        flags = {"data": str(data), "config": str(config), "seed": seed,
                 "chains": chains, "iters": iters, "burnin": burnin,
                 "holdout": holdout, "expected_size": expected_size}
        outp = Path(out)
        artifacts.save_run(outp, draws, prior_set, scaling, extra={"flags": flags})
        ds.write_csv(train, outp / "train.csv")
        if hold is not None:
            ds.write_csv(hold, outp / "holdout.csv")
            report = one_step_ahead_eval(merge_chains(draws), train, hold, scaling)
            (outp / "evaluation.json").write_text(report.to_json())

        diag = json.loads((outp / "diagnostics.json").read_text())
        bad = {n: v for n, v in diag["rhat"].items() if v > RHAT_BAR}
        if bad:
            click.echo(json.dumps({"code": "ConvergenceWarning",
                                   "message": f"R-hat above {RHAT_BAR}",
                                   "detail": bad}), err=True)
            sys.exit(EXIT_RHAT)
        click.echo(str(outp / "manifest.json"))
    except GoodwillError as e:
        sys.exit(_fail(e))


@main.command()
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--horizon", default=12, show_default=True, type=int)
@click.option("--future", "future_path", type=click.Path(exists=True),
              help="CSV of planned u_/x_ rows covering the horizon")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--thin", default=1, show_default=True, type=int)
@click.option("--out", type=click.Path())
def forecast(model_dir, horizon, future_path, seed, thin, out):
    """Sample the posterior predictive over a future horizon."""
    try:
        _, merged, _, scaling, _, train = _load_model(model_dir)
        u_fut, x_fut = {}, {}
        if future_path:
            u_fut, x_fut, _ = _read_future_csv(future_path)
        rng = np.random.default_rng(seed)
        dist = predictive_sample(merged, train, horizon, rng,
                                 u_future=u_fut or None, x_future=x_fut or None,
                                 scaling=scaling, thin=thin)
        _emit(dist.to_json(), out)
    except GoodwillError as e:
        sys.exit(_fail(e))


@main.command()
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--budget", required=True, type=float)
@click.option("--horizon", default=1, show_default=True, type=int)
@click.option("--lo", default=0.0, show_default=True, type=float)
@click.option("--hi", type=float, help="per-coordinate upper bound; default = budget")
@click.option("--risk-grid", default=20, show_default=True, type=int)
@click.option("--risk-cap", type=float, help="solve a single sigma^2-capped instance")
@click.option("--equality", is_flag=True, help="spend the budget exactly")
@click.option("--future", "future_path", type=click.Path(exists=True),
              help="CSV of future x_ rows (required when the model has regressors)")
@click.option("--out", type=click.Path())
def allocate(model_dir, budget, horizon, lo, hi, risk_grid, risk_cap, equality,
             future_path, out):
    """Risk-constrained budget allocation from the fitted posterior."""
    try:
        _, merged, _, scaling, _, _ = _load_model(model_dir)
        x_fut = None
        if future_path:
            _, x_fut, _ = _read_future_csv(future_path)
        mm = reduce_moments(merged, x_fut, horizon=horizon, scaling=scaling)
        d = mm.d
        prob = AllocationProblem(budget=budget, lo=np.full(d, lo),
                                 hi=np.full(d, hi if hi is not None else budget),
                                 risk_cap=risk_cap, horizon=horizon, equality=equality)
        if risk_cap is not None:
            u = solve_risk_constrained(mm, prob)
            payload = {"u": u.tolist(), "expected_sales": mm.mean(u),
                       "variance": mm.variance(u)}
        else:
            grid = default_risk_grid(mm, prob, risk_grid)
            frontier = pareto_sweep(mm, prob, grid.tolist(), mode="risk")
            payload = json.loads(frontier.to_json())
        payload["channel_names"] = mm.channel_names
        payload["horizon"] = horizon
        _emit(json.dumps(payload, indent=2), out)
    except GoodwillError as e:
        sys.exit(_fail(e))


@main.command()
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path())
def diagnose(model_dir, out):
    """Recompute and print convergence diagnostics for a fitted model."""
    try:
        chains, _, _, _, _, _ = _load_model(model_dir)
        report = diagnostic_report(chains)
        _emit(report_to_json(report), out)
        if report["rhat"] and any(v > RHAT_BAR for v in report["rhat"].values()):
            sys.exit(EXIT_RHAT)
    except GoodwillError as e:
        sys.exit(_fail(e))


def _generated_series(spec_entry, T: int, rng) -> np.ndarray:
    if isinstance(spec_entry, list):
        arr = np.asarray(spec_entry, float)
        if len(arr) != T:
            raise ConfigError(f"explicit series length {len(arr)} != T={T}")
        return arr
    if not isinstance(spec_entry, dict) or len(spec_entry) != 1:
        raise ConfigError("series must be an array or a one-key generator object")
    kind, args = next(iter(spec_entry.items()))
    if kind == "lognormal":
        return rng.lognormal(args[0], args[1], T)
    if kind == "normal":
        return rng.normal(args[0], args[1], T)
    if kind == "binary":
        return (rng.random(T) < float(args)).astype(float)
    raise ConfigError(f"unknown series generator {kind!r}")


def _params_from_dict(d: dict) -> ModelParams:
    allowed = {f.name for f in ModelParams.__dataclass_fields__.values()}
    bad = set(d) - allowed
    if bad:
        raise ConfigError(f"unknown parameter fields {sorted(bad)}")
    return ModelParams(**d).validate()


@main.command()
@click.option("--config", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@click.option("--latents", type=click.Path(), help="also save latent paths (.npz)")
def simulate(config, seed, out, latents):
    """Forward-simulate a weekly panel from known parameters."""
    try:
        cfg = json.loads(Path(config).read_text())
        spec = ModelSpec.from_json(json.dumps(cfg["spec"])).validate()
        T = int(cfg["T"])
        gen_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        channels = {n: _generated_series(s, T, gen_rng)
                    for n, s in cfg.get("channels", {}).items()}
        regressors = {n: _generated_series(s, T, gen_rng)
                      for n, s in cfg.get("regressors", {}).items()}
        params = _params_from_dict(cfg["params"])
        data, latent = ds.simulate_dataset(spec, params, channels, regressors, seed,
                                           start=cfg.get("start", "2011-01-03"))
        ds.write_csv(data, out)
        if latents:
            np.savez(latents, **{n: v for n, v in latent.items()})
        click.echo(out)
    except GoodwillError as e:
        sys.exit(_fail(e))
    except (KeyError, TypeError) as e:
        sys.exit(_fail(ConfigError(f"bad simulation config: {e!r}")))


@main.command()
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--store", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(port, store, host):
    """Run the HTTP service backed by a writable store directory."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(store), host=host, port=port)


if __name__ == "__main__":
    main()
