"""On-disk artifacts for a fitted run.

Layout under the output directory:

    manifest.json        run identity: spec, sizes, seed, file list (no
                         timestamps -- identical runs produce identical bytes)
    spec.json            the model specification
    priors.json          the full prior set
    scaling.json         standardization parameters (when supplied)
    chain<c>_draws.csv   scalar draws, one row per kept iteration; columns:
                         delta, q_<channel>..., gamma_u_<channel>...,
                         beta_<regressor>..., gamma_x_<regressor>...,
                         obs_var, goodwill_var, level_var, slope_var,
                         seasonal_var
    chain<c>_theta.npy   sampled state paths, shape (n, T+1, m)
    chain<c>_lambdas.npy latent t-scales (student-t runs only)
    diagnostics.json     R-hat table, inclusion probabilities, traces
    tables.json          coefficient and inclusion summary tables
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .blocks import ModelSpec, state_layout
from .dataset import ScalingParams
from .diagnostics import diagnostic_report, coefficient_table, inclusion_probabilities
from .errors import SchemaError
from .mcmc import McmcDraws
from .priors import DeltaPrior, InverseGamma, PriorSet, SpikeSlabPrior, VariancePriors

FORMAT_VERSION = 1
CSV_FLOAT_FMT = "%.17g"


def priors_to_json(p: PriorSet) -> str:
    return json.dumps({
        "spike_slab": {"pi": p.spike_slab.pi.tolist(), "kappa": p.spike_slab.kappa,
                       "sigma_shape": p.spike_slab.sigma_shape,
                       "sigma_scale": p.spike_slab.sigma_scale},
        "variances": {name: {"shape": ig.shape, "scale": ig.scale}
                      for name, ig in (("goodwill", p.variances.goodwill),
                                       ("level", p.variances.level),
                                       ("slope", p.variances.slope),
                                       ("seasonal", p.variances.seasonal),
                                       ("observation", p.variances.observation))},
        "delta": {"family": p.delta.family, "a": p.delta.a, "b": p.delta.b,
                  "value": p.delta.value},
    }, indent=2, sort_keys=True)


def priors_from_json(s: str) -> PriorSet:
    d = json.loads(s)
    ss = d["spike_slab"]
    v = d["variances"]
    ig = lambda name: InverseGamma(v[name]["shape"], v[name]["scale"])
    dl = d["delta"]
    return PriorSet(
        spike_slab=SpikeSlabPrior(np.asarray(ss["pi"], float), ss["kappa"],
                                  ss["sigma_shape"], ss["sigma_scale"]),
        variances=VariancePriors(ig("goodwill"), ig("level"), ig("slope"),
                                 ig("seasonal"), ig("observation")),
        delta=DeltaPrior(dl["family"], dl["a"], dl["b"], dl["value"]),
    )


class _NamesOnly:
    """Minimal dataset stand-in carrying just series names, for layout lookup."""

    def __init__(self, channel_names, regressor_names):
        self.channel_names = list(channel_names)
        self.regressor_names = list(regressor_names)
        self.channels = {c: None for c in self.channel_names}
        self.regressors = {r: None for r in self.regressor_names}
        self.n_weeks = 0


def _scalar_columns(d: McmcDraws) -> tuple[list[str], np.ndarray]:
    names = (["delta"]
             + [f"q_{c}" for c in d.channel_names]
             + [f"gamma_u_{c}" for c in d.channel_names]
             + [f"beta_{r}" for r in d.regressor_names]
             + [f"gamma_x_{r}" for r in d.regressor_names]
             + ["obs_var", "goodwill_var", "level_var", "slope_var", "seasonal_var"])
    mat = np.column_stack([d.delta[:, None], d.q, d.gamma_channels.astype(float),
                           d.beta, d.gamma_beta.astype(float),
                           d.obs_var[:, None], d.goodwill_var[:, None],
                           d.level_var[:, None], d.slope_var[:, None],
                           d.seasonal_var[:, None]])
    return names, mat


def save_run(outdir, chains: list[McmcDraws], priors: PriorSet,
             scaling: ScalingParams | None = None,
             extra: dict | None = None) -> Path:
    """Write all artifacts; returns the manifest path.

    Output is byte-deterministic in the inputs: no timestamps, sorted JSON
    keys, fixed float formatting.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    c0 = chains[0]
    files = {"spec": "spec.json", "priors": "priors.json",
             "diagnostics": "diagnostics.json", "tables": "tables.json"}

    (out / "spec.json").write_text(c0.spec.to_json())
    (out / "priors.json").write_text(priors_to_json(priors))
    if scaling is not None:
        files["scaling"] = "scaling.json"
        (out / "scaling.json").write_text(scaling.to_json())

    chain_meta = []
    for d in chains:
        names, mat = _scalar_columns(d)
        draws_file = f"chain{d.chain_id}_draws.csv"
        theta_file = f"chain{d.chain_id}_theta.npy"
        np.savetxt(out / draws_file, mat, fmt=CSV_FLOAT_FMT, delimiter=",",
                   header=",".join(names), comments="")
        np.save(out / theta_file, d.theta)
        meta = {"chain_id": d.chain_id, "draws": draws_file, "theta": theta_file,
                "delta_accept_rate": d.delta_accept_rate}
        if d.lambdas is not None:
            lam_file = f"chain{d.chain_id}_lambdas.npy"
            np.save(out / lam_file, d.lambdas)
            meta["lambdas"] = lam_file
        chain_meta.append(meta)

    report = diagnostic_report(chains)
    (out / "diagnostics.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    from .mcmc import merge_chains
    merged = merge_chains(chains)
    tables = {"coefficients": coefficient_table(merged),
              "inclusion_probabilities": inclusion_probabilities(merged)}
    (out / "tables.json").write_text(json.dumps(tables, indent=2, sort_keys=True))

    manifest = {
        "format_version": FORMAT_VERSION,
        "seed": c0.seed,
        "chains": len(chains),
        "K": c0.K,
        "burn_in": c0.burn_in,
        "n_kept_per_chain": c0.n,
        "variant": c0.spec.variant,
        "channel_names": c0.channel_names,
        "regressor_names": c0.regressor_names,
        "files": files,
        "chain_files": chain_meta,
    }
    if extra:
        manifest["extra"] = extra
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def load_run(outdir) -> tuple[list[McmcDraws], PriorSet, ScalingParams | None, dict]:
    """Rebuild the chain draws and priors from a saved run directory."""
    out = Path(outdir)
    mf_path = out / "manifest.json"
    if not mf_path.exists():
        raise SchemaError(f"no manifest.json under {out}")
    manifest = json.loads(mf_path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise SchemaError(f"unsupported artifact format {manifest.get('format_version')}")
    spec = ModelSpec.from_json((out / manifest["files"]["spec"]).read_text())
    priors = priors_from_json((out / manifest["files"]["priors"]).read_text())
    scaling = None
    if "scaling" in manifest["files"]:
        scaling = ScalingParams.from_json((out / manifest["files"]["scaling"]).read_text())

    ch = manifest["channel_names"]
    rg = manifest["regressor_names"]
    k, p = len(ch), len(rg)
    layout = state_layout(spec, _NamesOnly(ch, rg), include_regression=False)
    chains = []
    for meta in manifest["chain_files"]:
        mat = np.loadtxt(out / meta["draws"], delimiter=",", skiprows=1, ndmin=2)
        theta = np.load(out / meta["theta"])
        lam = np.load(out / meta["lambdas"]) if "lambdas" in meta else None
        i = 0
        delta = mat[:, i]; i += 1
        q = mat[:, i:i + k]; i += k
        g_ch = mat[:, i:i + k].astype(int); i += k
        beta = mat[:, i:i + p]; i += p
        g_b = mat[:, i:i + p].astype(int); i += p
        obs_var, goodwill_var, level_var, slope_var, seasonal_var = mat[:, i:i + 5].T
        chains.append(McmcDraws(
            spec=spec, channel_names=ch, regressor_names=rg, layout=layout,
            K=manifest["K"], burn_in=manifest["burn_in"],
            chain_id=meta["chain_id"], seed=manifest["seed"],
            theta=theta, delta=delta, q=q, gamma_channels=g_ch,
            beta=beta, gamma_beta=g_b, obs_var=obs_var,
            goodwill_var=goodwill_var, level_var=level_var,
            slope_var=slope_var, seasonal_var=seasonal_var, lambdas=lam,
            delta_accept_rate=meta["delta_accept_rate"],
        ))
    return chains, priors, scaling, manifest
