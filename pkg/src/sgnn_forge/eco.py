"""Ecological generators: butterfly communities and lynx-hare cycles.

Two latent-dynamics families share one observation pipeline.  Multispecies
butterfly communities follow logistic growth with weak Lotka-Volterra
competition under an AR(1) environment and seasonally modulated carrying
capacities; the predator-prey pair follows a Rosenzweig-MacArthur model
with predator self-limitation and population-size-scaled demographic noise.
Latent abundances become survey-style observations through negative
binomial sampling, a log10 transform, and additive measurement noise.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError, ParameterError

MAX_SPECIES = 32
MIN_SPECIES = 2
GROWTH_RATE_RANGE = (0.15, 0.4)
LOG10_N0_RANGE = (1.7, 2.4)
CAPACITY_MULT_RANGE = (1.5, 2.5)
COMPETITION_MEAN = 0.03
COMPETITION_SD = 0.01
SEASONAL_AMPLITUDE = 0.15
ENV_RHO = 0.7
ENV_SD = 0.05
ECO_HORIZON_YEARS = 100
RK4_STEP_YEARS = 0.05
PROCESS_NOISE_CV = 0.03
NB_OVERDISPERSION = 2000.0
LOG_NOISE_SD = 0.08

LYNXHARE_RANGES = {
    "hare_growth": (0.4, 0.6),
    "hare_capacity": (80.0, 120.0),
    "predation_rate": (0.02, 0.04),
    "conversion_rate": (0.025, 0.04),
    "lynx_mortality": (1.0, 2.0),
    "lynx_self_limit": (0.0005, 0.002),
    "hare_init": (20.0, 80.0),
    "lynx_init": (5.0, 30.0),
}
HARE_MAX = 200.0
LYNX_MAX = 80.0
EULER_STEP_YEARS = 0.01


@dataclass
class ButterflyParams:
    """One sampled butterfly community."""

    n_species: int
    growth_rates: np.ndarray       # per year, one per species
    initial_abundance: np.ndarray
    capacity: np.ndarray           # baseline carrying capacity per species
    competition: np.ndarray        # n x n, zero diagonal, nonnegative
    seasonal_amplitude: float = SEASONAL_AMPLITUDE
    seasonal_phase: float = 0.0
    env_rho: float = ENV_RHO
    env_sd: float = ENV_SD
    horizon_years: int = ECO_HORIZON_YEARS

    def __post_init__(self):
        S = self.n_species
        if not 1 <= S <= MAX_SPECIES:
            raise ParameterError(f"n_species must be in [1, {MAX_SPECIES}], got {S}")
        if self.competition.shape != (S, S):
            raise ParameterError("competition matrix must be n_species square")
        if np.any(np.diag(self.competition) != 0):
            raise ParameterError("competition diagonal must be zero")
        if np.any(self.competition < 0):
            raise ParameterError("competition coefficients must be nonnegative")
        for name in ("growth_rates", "initial_abundance", "capacity"):
            arr = getattr(self, name)
            if arr.shape != (S,):
                raise ParameterError(f"{name} must have one value per species")


@dataclass
class LynxHareParams:
    """One sampled predator-prey configuration."""

    hare_growth: float
    hare_capacity: float
    predation_rate: float
    conversion_rate: float
    lynx_mortality: float
    lynx_self_limit: float
    hare_init: float
    lynx_init: float
    hare_max: float = HARE_MAX
    lynx_max: float = LYNX_MAX
    horizon_years: int = ECO_HORIZON_YEARS

    def __post_init__(self):
        for name in ("hare_growth", "predation_rate", "conversion_rate",
                     "lynx_self_limit", "hare_init", "lynx_init"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be nonnegative")
        for name in ("hare_capacity", "lynx_mortality", "hare_max", "lynx_max"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")


@dataclass
class EcoTrajectory:
    """Latent and observed output of one ecological run."""

    latent: np.ndarray           # species x years
    observed_log10: np.ndarray   # species x years
    params: object


def sample_butterfly_community(rng) -> ButterflyParams:
    """Draw one community from the documented prior."""
    S = int(rng.integers(MIN_SPECIES, MAX_SPECIES + 1))
    n0 = 10.0 ** rng.uniform(*LOG10_N0_RANGE, S)
    alpha = np.maximum(rng.normal(COMPETITION_MEAN, COMPETITION_SD, (S, S)), 0.0)
    np.fill_diagonal(alpha, 0.0)
    return ButterflyParams(
        n_species=S,
        growth_rates=rng.uniform(*GROWTH_RATE_RANGE, S),
        initial_abundance=n0,
        capacity=n0 * rng.uniform(*CAPACITY_MULT_RANGE, S),
        competition=alpha,
        seasonal_phase=float(rng.uniform(0.0, 1.0)),
    )


def environment_multipliers(params: ButterflyParams, rng) -> np.ndarray:
    """Annual mean-one environmental factors from the AR(1) shock process."""
    n = params.horizon_years
    e = np.empty(n)
    e[0] = rng.normal(1.0, params.env_sd)
    shocks = rng.normal(0.0, params.env_sd, n - 1)
    for t in range(1, n):
        e[t] = params.env_rho * e[t - 1] + shocks[t - 1]
    mult = np.exp(e)
    return mult / mult.mean()


def simulate_butterfly(params: ButterflyParams, rng=None, *,
                       environment: bool = True,
                       process_noise: bool = True,
                       observation: bool = True) -> EcoTrajectory:
    """Integrate the community dynamics and layer on the observation model.

    The keyword switches disable individual stochastic stages; with all
    three off the run is fully deterministic and needs no generator.
    Carrying capacities are held constant within each year at
    K_i * env_t * (1 + amplitude * sin(2*pi*(t + phase)/12)) with t the
    year index, matching the annual resolution of the environment process.
    """
    if rng is None and (environment or process_noise or observation):
        raise ParameterError("stochastic stages need a generator")
    n_years = params.horizon_years
    S = params.n_species
    env = environment_multipliers(params, rng) if environment else np.ones(n_years)
    seasonal = 1.0 + params.seasonal_amplitude * np.sin(
        2.0 * math.pi * (np.arange(n_years) + params.seasonal_phase) / 12.0)

    r = params.growth_rates
    alpha = params.competition
    latent = np.empty((S, n_years))
    state = params.initial_abundance.astype(float).copy()
    latent[:, 0] = state
    steps_per_year = int(round(1.0 / RK4_STEP_YEARS))
    h = RK4_STEP_YEARS
    for year in range(n_years - 1):
        k_year = params.capacity * env[year] * seasonal[year]

        def deriv(n):
            crowding = n + alpha @ n
            return r * n * (1.0 - crowding / k_year)

        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(steps_per_year):
                k1 = deriv(state)
                k2 = deriv(state + h / 2 * k1)
                k3 = deriv(state + h / 2 * k2)
                k4 = deriv(state + h * k3)
                state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise IntegrationError(
                f"butterfly integration diverged at year {year + 1}: {params}")
        state = np.maximum(state, 0.0)
        latent[:, year + 1] = state

    if process_noise:
        latent = np.maximum(latent + rng.normal(0.0, PROCESS_NOISE_CV * latent), 0.0)
    observed = observe_counts(latent, rng) if observation else np.log10(latent + 1.0)
    return EcoTrajectory(latent=latent, observed_log10=observed, params=params)


def sample_lynx_hare(rng) -> LynxHareParams:
    """Draw one predator-prey configuration from the documented prior."""
    values = {name: float(rng.uniform(lo, hi)) for name, (lo, hi) in LYNXHARE_RANGES.items()}
    return LynxHareParams(**values)


def simulate_lynx_hare(params: LynxHareParams, rng=None, *,
                       demographic_noise: bool = True,
                       observation: bool = True) -> EcoTrajectory:
    """Step the predator-prey system and layer on the observation model.

    Euler integration inside each year, then one demographic-noise
    injection per annual output with coefficients of variation shrinking
    as populations grow; both populations stay clamped to their plausible
    ranges.  Outputs are annual pelt-unit series, observed like the
    butterfly model.
    """
    if rng is None and (demographic_noise or observation):
        raise ParameterError("stochastic stages need a generator")
    n_years = params.horizon_years
    H, L = params.hare_init, params.lynx_init
    latent = np.empty((2, n_years))
    latent[:, 0] = (H, L)
    steps = int(round(1.0 / EULER_STEP_YEARS))
    h = EULER_STEP_YEARS
    r, K = params.hare_growth, params.hare_capacity
    beta, delta = params.predation_rate, params.conversion_rate
    gamma, rho = params.lynx_mortality, params.lynx_self_limit
    for year in range(1, n_years):
        for _ in range(steps):
            dH = r * H * (1.0 - H / K) - beta * H * L
            dL = delta * H * L - gamma * L - rho * L * L
            H = min(max(H + h * dH, 0.0), params.hare_max)
            L = min(max(L + h * dL, 0.0), params.lynx_max)
        if demographic_noise:
            cv_h = min(0.1, 200.0 / (1000.0 * H)) if H > 0 else 0.0
            cv_l = min(0.1, 100.0 / (1000.0 * L)) if L > 0 else 0.0
            H = min(max(rng.normal(H, cv_h * H), 0.0), params.hare_max)
            L = min(max(rng.normal(L, cv_l * L), 0.0), params.lynx_max)
        latent[:, year] = (H, L)
    observed = observe_counts(latent, rng) if observation else np.log10(latent + 1.0)
    return EcoTrajectory(latent=latent, observed_log10=observed, params=params)


def sample_survey_counts(latent: np.ndarray, rng) -> np.ndarray:
    """Negative binomial survey counts around latent abundances.

    Variance is mu + mu^2 / overdispersion, so counts are nearly Poisson
    at low abundance and mildly overdispersed at high abundance.
    """
    mu = np.asarray(latent, dtype=float)
    if np.any(mu < 0):
        raise ParameterError("latent abundances must be nonnegative")
    p = NB_OVERDISPERSION / (NB_OVERDISPERSION + mu)
    return rng.negative_binomial(NB_OVERDISPERSION, p)


def observe_counts(latent: np.ndarray, rng) -> np.ndarray:
    """Survey-style observation: counts, log10(count + 1), additive noise."""
    counts = sample_survey_counts(latent, rng)
    return np.log10(counts + 1.0) + rng.normal(0.0, LOG_NOISE_SD, np.shape(latent))
