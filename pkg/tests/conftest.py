import time

import numpy as np
import pytest

import goodwill as gw

# wall-clock of expensive session fits, consumed by the acceptance tests
FIT_SECONDS = {}

# one line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

# ---------------------------------------------------------------------------
# Shared synthetic scenario: T=400 weeks (300 train / 100 holdout), k=3
# channels, p=6 ambient regressors of which 3 are truly active, delta=0.3,
# Gaussian noise.  Expensive fits are session-scoped so the acceptance tests
# and unit tests share them.
# ---------------------------------------------------------------------------

TRUE_DELTA = 0.3
TRUE_Q = np.array([0.8, 0.5, 0.3])
TRUE_BETA = np.array([1.0, -0.8, 0.6, 0.0, 0.0, 0.0])
ACTIVE = ["r1", "r2", "r3"]
NULL = ["r4", "r5", "r6"]
CHANNELS = ["tv", "radio", "web"]


def make_spec(obs=None):
    return gw.ModelSpec(
        (gw.NerloveArrowBlock(), gw.TrendBlock("local_level"), gw.RegressionBlock()),
        obs or gw.GaussianObs(), "RF")


def make_true_params():
    return gw.ModelParams(
        delta=TRUE_DELTA, q=TRUE_Q.copy(), beta=TRUE_BETA.copy(),
        goodwill_var=0.05, level_var=0.01, obs_var=0.25,
        goodwill0=3.0, level0=5.0)


@pytest.fixture(scope="session")
def synth_case():
    spec = make_spec()
    params = make_true_params()
    rng = np.random.default_rng(2024)
    T = 400
    investments = {c: rng.lognormal(0.0, 0.5, T) for c in CHANNELS}
    regressors = {r: rng.normal(0.0, 1.0, T) for r in ACTIVE + NULL}
    data, latents = gw.simulate_dataset(spec, params, investments, regressors, seed=5)
    assert float(np.min(data.sales)) > 0.5  # MAPE needs positive actuals
    std, scaling = gw.standardize(data)
    train, hold = gw.split(std, gw.SplitSpec(300))
    raw_train, raw_hold = gw.split(data, gw.SplitSpec(300))
    return {
        "spec": spec, "params": params, "data": data, "latents": latents,
        "std": std, "scaling": scaling, "train": train, "hold": hold,
        "raw_train": raw_train, "raw_hold": raw_hold,
    }


@pytest.fixture(scope="session")
def synth_priors():
    # expected ambient model size 3 over p=6 -> pi = 0.5 per ambient series
    return gw.default_priors("RF", len(CHANNELS), 6, expected_size=3.0)


@pytest.fixture(scope="session")
def synth_chains(synth_case, synth_priors):
    """The full desk-scale fit: 4 chains, K=4000, burn-in 2000."""
    t0 = time.perf_counter()
    chains = gw.gibbs_run(synth_case["spec"], synth_case["train"], synth_priors,
                          chains=4, K=4000, burn_in=2000, seed=11)
    FIT_SECONDS["synth"] = time.perf_counter() - t0
    return chains


@pytest.fixture(scope="session")
def synth_merged(synth_chains):
    return gw.merge_chains(synth_chains)


@pytest.fixture(scope="session")
def small_fit():
    """A cheap 2-channel fit for plumbing tests (artifacts, CLI, service)."""
    spec = gw.ModelSpec((gw.NerloveArrowBlock(), gw.TrendBlock(), gw.RegressionBlock()),
                        gw.GaussianObs(), "RF")
    params = gw.ModelParams(delta=0.3, q=np.array([0.8, 0.5]), beta=np.array([1.0, 0.0]),
                            goodwill_var=0.05, level_var=0.02, obs_var=0.1,
                            goodwill0=1.0, level0=2.0)
    rng = np.random.default_rng(0)
    T = 120
    inv = {"tv": rng.lognormal(0, 0.5, T), "web": rng.lognormal(0, 0.5, T)}
    reg = {"unemp": rng.normal(0, 1, T), "noise": rng.normal(0, 1, T)}
    data, _ = gw.simulate_dataset(spec, params, inv, reg, seed=1)
    std, scaling = gw.standardize(data)
    priors = gw.default_priors("RF", 2, 2, expected_size=1.0)
    chains = gw.gibbs_run(spec, std, priors, chains=2, K=200, burn_in=100, seed=3)
    return {"spec": spec, "params": params, "data": data, "std": std,
            "scaling": scaling, "priors": priors, "chains": chains,
            "merged": gw.merge_chains(chains)}
