"""Bayesian structural time-series toolkit for advertising goodwill models:
state-space filtering/FFBS, spike-and-slab Gibbs sampling, forecasting and
risk-constrained budget allocation."""

from .allocator import (AllocationProblem, FrontierPoint, MomentModel,
                        ParetoFrontier, default_risk_grid, evaluate_strategies,
                        filter_dominated, min_variance_point, multi_step_moments,
                        pareto_sweep, reduce_moments, solve_penalized,
                        solve_risk_constrained)
from .blocks import (GaussianObs, ModelParams, ModelSpec, NerloveArrowBlock,
                     RegressionBlock, SeasonalBlock, StudentTObs, TrendBlock,
                     compile_horizon, compile_system, initial_state, koyck_step,
                     lagged_spend, prior_belief, seasonal_pattern_check,
                     state_layout)
from .dataset import (Dataset, ScalingParams, SplitSpec, concatenate,
                      destandardize, load_csv, simulate_dataset, split,
                      standardize, write_csv)
from .diagnostics import (diagnostic_report, gelman_rubin,
                          inclusion_probabilities, coefficient_table,
                          report_to_json, rhat_table, traces)
from .errors import (ConfigError, GoodwillError, InfeasibleError,
                     NumericalError, SchemaError, ValidationError)
from .forecast import (EvaluationReport, ForecastDistribution, cps, mape,
                       one_step_ahead_eval, predictive_sample,
                       standardized_residuals)
from .mcmc import (McmcDraws, estimate_nu, gibbs_run, holdout_filter_draw,
                   merge_chains, sample_delta, sample_latent_scales,
                   sample_spike_slab)
from .priors import (DeltaPrior, InverseGamma, PriorSet, SpikeSlabPrior,
                     VariancePriors, default_priors)
from .state_space import (DEFAULT_DIFFUSE_VARIANCE, FilterResult,
                          GaussianBelief, StateSpaceSystem, ffbs_sample,
                          kalman_filter, kalman_smoother, simulate_forward)

__version__ = "0.1.0"
