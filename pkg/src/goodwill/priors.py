"""Prior specifications for the Gibbs sampler.

The spike-and-slab indicator vector covers channel effectiveness
coefficients first, then ambient regression coefficients, so a config with
5 channels and 7 ambient series has p = 12 coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass
class SpikeSlabPrior:
    """Bernoulli inclusion prior + Zellner-style Gaussian slab.

    pi: per-coordinate prior inclusion probability; pi=1 forces permanent
    inclusion, pi=0 permanent exclusion.  The slab places prior information
    kappa * X'X / n on the included coefficients (scaled by the residual
    variance).  sigma_shape/sigma_scale parameterize the inverse-gamma
    prior on the residual variance.
    """

    pi: np.ndarray
    kappa: float = 1.0
    sigma_shape: float = 0.01
    sigma_scale: float = 0.01

    def __post_init__(self):
        self.pi = np.atleast_1d(np.asarray(self.pi, float))
        if np.any((self.pi < 0) | (self.pi > 1)):
            raise ConfigError("inclusion probabilities must lie in [0, 1]")
        if self.kappa <= 0:
            raise ConfigError("kappa must be positive")
        if self.sigma_shape <= 0 or self.sigma_scale <= 0:
            raise ConfigError("inverse-gamma prior needs positive shape and scale")

    @property
    def p(self) -> int:
        return len(self.pi)

    @classmethod
    def expected_size(cls, p: int, k: float, **kw) -> "SpikeSlabPrior":
        """Uniform pi = k/p giving prior expected model size k."""
        return cls(np.full(p, k / p), **kw)

    @classmethod
    def for_variant(cls, variant: str, k_channels: int, p_ambient: int,
                    expected_size: float = 5.0, **kw) -> "SpikeSlabPrior":
        """Variant conventions: B forces channels in and has no ambient
        coordinates; RA treats all k+p coordinates equally with the given
        expected size; RF forces channels in and spreads the expected size
        over the ambient coordinates."""
        if variant == "B":
            pi = np.ones(k_channels)
        elif variant == "RA":
            total = k_channels + p_ambient
            pi = np.full(total, expected_size / total)
        elif variant == "RF":
            pi = np.concatenate([np.ones(k_channels),
                                 np.full(p_ambient, expected_size / p_ambient) if p_ambient else np.zeros(0)])
        else:
            raise ConfigError(f"unknown variant {variant!r}")
        return cls(np.clip(pi, 0.0, 1.0), **kw)


@dataclass(frozen=True)
class InverseGamma:
    shape: float
    scale: float

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ConfigError("inverse-gamma shape and scale must be positive")

    def draw(self, rng, extra_shape: float = 0.0, extra_scale: float = 0.0) -> float:
        return float((self.scale + extra_scale) / rng.gamma(self.shape + extra_shape))


@dataclass
class VariancePriors:
    """Weakly informative inverse-gamma priors for each structural variance."""

    goodwill: InverseGamma = field(default_factory=lambda: InverseGamma(0.01, 0.01))
    level: InverseGamma = field(default_factory=lambda: InverseGamma(0.01, 0.01))
    slope: InverseGamma = field(default_factory=lambda: InverseGamma(0.01, 0.01))
    seasonal: InverseGamma = field(default_factory=lambda: InverseGamma(0.01, 0.01))
    observation: InverseGamma = field(default_factory=lambda: InverseGamma(0.01, 0.01))

    @classmethod
    def scaled_to(cls, sales_var: float) -> "VariancePriors":
        ig = lambda: InverseGamma(0.01, 0.01 * sales_var)
        return cls(ig(), ig(), ig(), ig(), ig())


@dataclass
class DeltaPrior:
    """Prior on the forgetting rate; support within [0, 1]."""

    family: str = "uniform"      # uniform | beta | point
    a: float = 1.0
    b: float = 1.0
    value: float = 0.5           # used by the point family

    def __post_init__(self):
        if self.family not in ("uniform", "beta", "point"):
            raise ConfigError(f"unknown delta prior family {self.family!r}")
        if self.family == "beta" and (self.a <= 0 or self.b <= 0):
            raise ConfigError("beta prior needs positive parameters")
        if self.family == "point" and not (0.0 <= self.value <= 1.0):
            raise ConfigError("point prior value must lie in [0, 1]")

    def logpdf(self, delta: float) -> float:
        if not (0.0 < delta < 1.0):
            return -np.inf
        if self.family == "beta":
            return float((self.a - 1) * np.log(delta) + (self.b - 1) * np.log1p(-delta))
        return 0.0


@dataclass
class PriorSet:
    spike_slab: SpikeSlabPrior
    variances: VariancePriors = field(default_factory=VariancePriors)
    delta: DeltaPrior = field(default_factory=DeltaPrior)


def default_priors(variant: str, k_channels: int, p_ambient: int,
                   expected_size: float = 5.0, sales_var: float = 1.0) -> PriorSet:
    return PriorSet(
        spike_slab=SpikeSlabPrior.for_variant(variant, k_channels, p_ambient, expected_size),
        variances=VariancePriors.scaled_to(sales_var),
        delta=DeltaPrior(),
    )
