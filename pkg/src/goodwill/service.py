"""HTTP service over the store directory: datasets, fits, forecasts,
allocations and diagnostics.

Store layout: <store>/datasets/<id>.csv and <store>/models/<id>/ holding
job.json, status.json and the standard run artifacts.  Ids are content
hashes, so posting the same dataset or the same (dataset, spec, seed,
sizes) job twice returns the existing id instead of recomputing.  Fit jobs
run on a small worker pool; status.json flips to "done" only after the
manifest write completes (written to a temp file and renamed, so readers
never observe a partial store).
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import artifacts
from . import dataset as ds
from .allocator import (AllocationProblem, default_risk_grid, evaluate_strategies,
                        filter_dominated, pareto_sweep, reduce_moments,
                        solve_risk_constrained)
from .blocks import ModelSpec, NerloveArrowBlock, RegressionBlock
from .errors import ConfigError, GoodwillError, SchemaError, ValidationError
from .forecast import predictive_sample
from .mcmc import gibbs_run, merge_chains
from .priors import default_priors

STORE_ENV = "GOODWILL_STORE"
WORKERS_ENV = "GOODWILL_WORKERS"


class NotFound(GoodwillError):
    pass


def _atomic_write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


class Store:
    """Registry of datasets and model fits on disk."""

    def __init__(self, root):
        self.root = Path(root)
        (self.root / "datasets").mkdir(parents=True, exist_ok=True)
        (self.root / "models").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        workers = int(os.environ.get(WORKERS_ENV, "2"))
        self._pool = ThreadPoolExecutor(max_workers=max(workers, 1))

    # ------------------------------------------------------------ datasets

    def put_dataset(self, csv_text: str) -> dict:
        data = ds.load_csv(io.StringIO(csv_text))  # validate before storing
        did = hashlib.sha256(csv_text.encode()).hexdigest()[:16]
        path = self.root / "datasets" / f"{did}.csv"
        if not path.exists():
            path.write_text(csv_text)
        return {"dataset_id": did, "n_weeks": data.n_weeks,
                "channels": data.channel_names, "regressors": data.regressor_names}

    def get_dataset(self, did: str) -> ds.Dataset:
        path = self.root / "datasets" / f"{did}.csv"
        if not path.exists():
            raise NotFound(f"dataset {did!r} not found")
        return ds.load_csv(path)

    # ------------------------------------------------------------ models

    def submit_fit(self, body: dict) -> dict:
        job = {
            "dataset_id": body["dataset_id"],
            "spec": body["spec"],
            "seed": int(body.get("seed", 0)),
            "chains": int(body.get("chains", 4)),
            "iters": int(body.get("iters", 4000)),
            "burnin": int(body.get("burnin", 2000)),
            "expected_size": float(body.get("expected_size", 5.0)),
        }
        ModelSpec.from_json(json.dumps(job["spec"])).validate()
        self.get_dataset(job["dataset_id"])
        canon = json.dumps(job, sort_keys=True)
        mid = hashlib.sha256(canon.encode()).hexdigest()[:16]
        mdir = self.root / "models" / mid
        with self._lock:
            if mdir.exists():
                return {"model_id": mid, "status": self.status(mid)["status"]}
            mdir.mkdir(parents=True)
            (mdir / "job.json").write_text(canon)
            _atomic_write(mdir / "status.json", json.dumps({"status": "queued"}))
        self._pool.submit(self._run_fit, mid)
        return {"model_id": mid, "status": "queued"}

    def _run_fit(self, mid: str):
        mdir = self.root / "models" / mid
        job = json.loads((mdir / "job.json").read_text())
        try:
            _atomic_write(mdir / "status.json", json.dumps({"status": "running"}))
            spec = ModelSpec.from_json(json.dumps(job["spec"])).validate()
            raw = self.get_dataset(job["dataset_id"])
            train, scaling = ds.standardize(raw)
            k = len(spec.block(NerloveArrowBlock).resolve_channels(train))
            reg = spec.block(RegressionBlock)
            p = len(reg.resolve_regressors(train)) if reg else 0
            priors = default_priors(spec.variant, k, p, job["expected_size"])
            chains = gibbs_run(spec, train, priors, chains=job["chains"],
                               K=job["iters"], burn_in=job["burnin"], seed=job["seed"])
            artifacts.save_run(mdir, chains, priors, scaling, extra={"flags": job})
            ds.write_csv(train, mdir / "train.csv")
            _atomic_write(mdir / "status.json", json.dumps({"status": "done"}))
        except Exception as e:  # recorded, surfaced via polling
            _atomic_write(mdir / "status.json",
                          json.dumps({"status": "failed", "error": str(e),
                                      "code": type(e).__name__}))

    def _model_dir(self, mid: str) -> Path:
        mdir = self.root / "models" / mid
        if not mdir.exists():
            raise NotFound(f"model {mid!r} not found")
        return mdir

    def status(self, mid: str) -> dict:
        mdir = self._model_dir(mid)
        return json.loads((mdir / "status.json").read_text())

    def summary(self, mid: str) -> dict:
        mdir = self._model_dir(mid)
        st = self.status(mid)
        out = {"model_id": mid, **st,
               "job": json.loads((mdir / "job.json").read_text())}
        if st["status"] == "done":
            manifest = json.loads((mdir / "manifest.json").read_text())
            tables = json.loads((mdir / "tables.json").read_text())
            out["channel_names"] = manifest["channel_names"]
            out["regressor_names"] = manifest["regressor_names"]
            out["n_kept_per_chain"] = manifest["n_kept_per_chain"]
            out["coefficients"] = tables["coefficients"]
            out["inclusion_probabilities"] = tables["inclusion_probabilities"]
        return out

    def loaded(self, mid: str):
        mdir = self._model_dir(mid)
        if self.status(mid)["status"] != "done":
            raise ValidationError(f"model {mid!r} is not done")
        chains, priors, scaling, manifest = artifacts.load_run(mdir)
        train = ds.load_csv(mdir / "train.csv")
        return merge_chains(chains), priors, scaling, manifest, train

    def diagnostics(self, mid: str) -> dict:
        mdir = self._model_dir(mid)
        if self.status(mid)["status"] != "done":
            raise ValidationError(f"model {mid!r} is not done")
        return json.loads((mdir / "diagnostics.json").read_text())


def _forecast_payload(store: Store, mid: str, body: dict) -> dict:
    merged, _, scaling, _, train = store.loaded(mid)
    h = int(body.get("h", 12))
    rng = np.random.default_rng(int(body.get("seed", 0)))
    u_future = {k: np.asarray(v, float) for k, v in (body.get("u_future") or {}).items()}
    x_future = {k: np.asarray(v, float) for k, v in (body.get("x_future") or {}).items()}
    dist = predictive_sample(merged, train, h, rng,
                             u_future=u_future or None, x_future=x_future or None,
                             scaling=scaling, thin=int(body.get("thin", 1)))
    return json.loads(dist.to_json())


def _allocate_payload(store: Store, mid: str, body: dict) -> dict:
    merged, _, scaling, _, _ = store.loaded(mid)
    horizon = int(body.get("horizon", 1))
    x_future = body.get("x_future")
    if x_future is not None:
        x_future = {k: np.asarray(v, float) for k, v in x_future.items()}
    mm = reduce_moments(merged, x_future, horizon=horizon, scaling=scaling)
    d = mm.d
    if "budget" not in body:
        raise ValidationError("allocation request requires a budget")
    budget = body["budget"]
    lo = np.asarray(body.get("lo", np.zeros(d)), float)
    hi_default = (np.sum(budget) if np.ndim(budget) else budget)
    hi = np.asarray(body.get("hi", np.full(d, hi_default)), float)
    if lo.size == 1:
        lo = np.full(d, float(lo))
    if hi.size == 1:
        hi = np.full(d, float(hi))
    prob = AllocationProblem(budget=budget, lo=lo, hi=hi,
                             risk_cap=body.get("risk_cap"),
                             risk_penalty=body.get("risk_penalty"),
                             horizon=horizon, equality=bool(body.get("equality", False)))
    out = {"channel_names": mm.channel_names, "horizon": horizon,
           "moment_model": {"m_c": mm.m_c, "sigma_cc": mm.sigma_cc,
                            "m_q": mm.m_q.tolist(), "omega": mm.omega}}
    if prob.risk_cap is not None and "grid" not in body and body.get("risk_grid") is None:
        u = solve_risk_constrained(mm, prob)
        out["u"] = u.tolist()
        out["expected_sales"] = mm.mean(u)
        out["variance"] = mm.variance(u)
    else:
        mode = body.get("mode", "risk")
        grid = body.get("grid")
        if grid is None:
            grid = default_risk_grid(mm, prob, int(body.get("risk_grid", 20))).tolist()
        frontier = pareto_sweep(mm, prob, grid, mode=mode)
        out.update(json.loads(frontier.to_json()))
    strategies = body.get("strategies")
    if strategies:
        evaluated = evaluate_strategies(mm, [np.asarray(s, float) for s in strategies])
        surviving = {id(t[0]) for t in filter_dominated(evaluated)}
        out["strategies"] = [{"u": u.tolist(), "expected_sales": m, "variance": v,
                              "dominated": id(u) not in surviving}
                             for u, m, v in evaluated]
    return out


def create_app(store_dir=None) -> FastAPI:
    root = store_dir or os.environ.get(STORE_ENV)
    if not root:
        raise ConfigError(f"no store directory: pass one or set {STORE_ENV}")
    store = Store(root)
    app = FastAPI(title="goodwill service")
    app.state.store = store

    @app.exception_handler(GoodwillError)
    async def _goodwill_error(request: Request, exc: GoodwillError):
        status = 404 if isinstance(exc, NotFound) else 400
        return JSONResponse(status_code=status,
                            content={"code": type(exc).__name__,
                                     "message": str(exc), "detail": None})

    @app.post("/datasets")
    async def post_dataset(request: Request):
        body = await request.body()
        return store.put_dataset(body.decode())

    @app.post("/models")
    async def post_model(request: Request):
        body = await request.json()
        for key in ("dataset_id", "spec"):
            if key not in body:
                raise ValidationError(f"fit request requires {key!r}")
        return store.submit_fit(body)

    @app.get("/models/{mid}")
    async def get_model(mid: str):
        return store.summary(mid)

    @app.get("/models/{mid}/forecast")
    async def get_forecast(mid: str, h: int = 12, seed: int = 0, thin: int = 1):
        return _forecast_payload(store, mid, {"h": h, "seed": seed, "thin": thin})

    @app.post("/models/{mid}/forecast")
    async def post_forecast(mid: str, request: Request):
        return _forecast_payload(store, mid, await request.json())

    @app.post("/models/{mid}/allocate")
    async def post_allocate(mid: str, request: Request):
        return _allocate_payload(store, mid, await request.json())

    @app.get("/models/{mid}/diagnostics")
    async def get_diagnostics(mid: str):
        return store.diagnostics(mid)

    return app
