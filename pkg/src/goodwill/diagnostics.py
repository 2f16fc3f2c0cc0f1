"""Convergence and interpretation diagnostics for the Gibbs output."""

from __future__ import annotations

import json

import numpy as np

from .errors import ValidationError
from .mcmc import McmcDraws, merge_chains

TRACE_MAX_POINTS = 5000
RHAT_BAR = 1.1


def gelman_rubin(chains) -> float:
    """Multi-chain potential-scale-reduction statistic.

    W = mean within-chain sample variance, B/m = sample variance of chain
    means, Vhat = ((m-1)/m) W + B/m, Rhat = sqrt(Vhat / W).  The classic
    (non-split) form: values slightly below 1 are possible.
    """
    seqs = [np.asarray(c, float) for c in chains]
    if len(seqs) < 2:
        raise ValidationError("Gelman-Rubin needs at least 2 chains")
    m = len(seqs[0])
    if m < 2 or any(len(s) != m for s in seqs):
        raise ValidationError("chains must share a common length >= 2")
    W = float(np.mean([np.var(s, ddof=1) for s in seqs]))
    if W == 0.0:
        raise ValidationError("all chains are constant; R-hat undefined")
    B_over_m = float(np.var([np.mean(s) for s in seqs], ddof=1))
    Vhat = (m - 1) / m * W + B_over_m
    return float(np.sqrt(Vhat / W))


def _scalar_coords(d: McmcDraws) -> dict[str, np.ndarray]:
    coords = {"delta": d.delta, "obs_var": d.obs_var, "goodwill_var": d.goodwill_var}
    if d.level_var.any():
        coords["level_var"] = d.level_var
    if d.seasonal_var.any():
        coords["seasonal_var"] = d.seasonal_var
    for j, name in enumerate(d.coef_names):
        coords[name] = d.coef[:, j]
    return coords


def rhat_table(chains: list[McmcDraws]) -> dict[str, float]:
    """Per-coordinate R-hat across chains; constant-everywhere coordinates
    (e.g. forced-out coefficients) are skipped."""
    per_chain = [_scalar_coords(c) for c in chains]
    out = {}
    for name in per_chain[0]:
        seqs = [pc[name] for pc in per_chain]
        if all(np.var(s) == 0 for s in seqs):
            continue
        out[name] = gelman_rubin(seqs)
    return out


def inclusion_probabilities(draws: McmcDraws) -> dict[str, dict]:
    """Fraction of draws including each coefficient, with the sign of its
    mean over included draws."""
    out = {}
    gamma = draws.gamma
    coef = draws.coef
    for j, name in enumerate(draws.coef_names):
        inc = gamma[:, j].astype(bool)
        prob = float(inc.mean())
        mean_inc = float(coef[inc, j].mean()) if inc.any() else 0.0
        out[name] = {"probability": prob,
                     "sign": "positive" if mean_inc > 0 else ("negative" if mean_inc < 0 else "zero")}
    return out


def coefficient_table(draws: McmcDraws) -> list[dict]:
    """Posterior mean/sd per coefficient; flagged significant when
    |mean| > 2 sd (the bold-entry convention)."""
    rows = []
    coef = draws.coef
    for j, name in enumerate(draws.coef_names):
        mean = float(coef[:, j].mean())
        sd = float(coef[:, j].std(ddof=1)) if len(coef) > 1 else 0.0
        rows.append({"name": name, "mean": mean, "sd": sd,
                     "significant": bool(abs(mean) > 2 * sd)})
    for name, arr in (("delta", draws.delta), ("obs_var", draws.obs_var),
                      ("goodwill_var", draws.goodwill_var)):
        mean = float(arr.mean())
        sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        rows.append({"name": name, "mean": mean, "sd": sd,
                     "significant": bool(abs(mean) > 2 * sd)})
    return rows


def traces(chains: list[McmcDraws], max_points: int = TRACE_MAX_POINTS) -> dict:
    """Decimated traces per coordinate, one series per chain."""
    out = {}
    per_chain = [_scalar_coords(c) for c in chains]
    n = len(chains[0].delta)
    step = max(1, n // max_points)
    for name in per_chain[0]:
        out[name] = [pc[name][::step].tolist() for pc in per_chain]
    return out


def diagnostic_report(chains: list[McmcDraws], decimate: int = TRACE_MAX_POINTS) -> dict:
    merged = merge_chains(chains)
    rhat = rhat_table(chains) if len(chains) >= 2 else {}
    return {
        "rhat": rhat,
        "rhat_variant": "multi-chain (non-split)",
        "rhat_bar": RHAT_BAR,
        "converged": bool(all(v < RHAT_BAR for v in rhat.values())) if rhat else None,
        "inclusion_probabilities": inclusion_probabilities(merged),
        "coefficients": coefficient_table(merged),
        "delta_accept_rate": [c.delta_accept_rate for c in chains],
        "traces": traces(chains, decimate),
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2)
