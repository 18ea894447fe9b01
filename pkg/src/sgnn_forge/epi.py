"""Stochastic compartmental epidemic engine with analytic reproduction numbers.

One engine covers the whole family from SIR up to SEAIR with waning immunity,
demographic turnover, importation, seasonal forcing, super-spreading,
multi-wave transmission, and threshold-triggered intervention dynamics.
Feature flags switch each mechanism on or off per sampled configuration.

Dynamics are discrete daily steps: every rate r becomes a per-day transition
probability 1 - exp(-r) and compartment flows are binomial draws from
start-of-day counts, which approximates tau-leaping.  In closed
configurations (no turnover, importation, or waning) the total population is
conserved exactly at every day.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError
from .stochastics import LogUniform

# Sampling ranges for every mechanistic parameter, used by sample_epi_params
# and audited by corpus_stats.
PARAM_RANGES = {
    "transmission_rate": (0.10, 1.00),
    "recovery_rate": (0.10, 0.33),
    "progression_rate": (0.20, 0.40),
    "asym_fraction": (0.10, 0.70),
    "asym_infectivity": (0.30, 1.00),
    "dispersion": (0.10, 1.00),
    "population": (5e4, 5e7),
    "turnover_rate": (0.0, 1.0 / 365),
    "waning_rate": (0.001, 0.0075),
    "importation_rate": (0.0001, 0.01),
    "p_hosp": (0.02, 0.15),
    "p_death_given_hosp": (0.05, 0.30),
    "hosp_delay_mean": (5.0, 12.0),
    "death_delay_mean": (14.0, 21.0),
    "npi_trigger_frac": (0.001, 0.01),
    "npi_relax_frac": (0.0002, 0.002),
    "npi_reduction": (0.20, 0.60),
    "npi_min_duration": (14, 120),
    "seasonal_amplitude": (0.05, 0.20),
}

# Probability each optional mechanism is active in a sampled configuration.
DEFAULT_FEATURE_PROBS = {
    "exposed": 0.70,
    "asym": 0.50,
    "npi": 0.25,
    "demography": 0.80,
    "waning": 0.50,
    "superspreading": 0.50,
    "importation": 1.00,
}

SEASONAL_FLOOR = 0.05
RELAX_PERSISTENCE_DAYS = 7


@dataclass(frozen=True)
class InterventionSpec:
    """Threshold-triggered transmission reduction (lockdown-style response)."""

    trigger_threshold: float  # daily new infections that switch the NPI on
    relax_threshold: float    # daily new infections below which it may relax
    reduction_factor: float   # fraction removed from transmission while active
    min_duration_days: int
    relax_persistence_days: int = RELAX_PERSISTENCE_DAYS

    def __post_init__(self):
        if not 0 < self.reduction_factor < 1:
            raise ParameterError(f"reduction_factor must be in (0, 1), got {self.reduction_factor}")
        if not self.trigger_threshold > self.relax_threshold:
            raise ParameterError("trigger_threshold must exceed relax_threshold")


@dataclass(frozen=True)
class ClinicalWave:
    """Severity of one transmission wave."""

    p_hosp: float
    p_death_given_hosp: float
    hosp_delay_mean: float
    death_delay_mean: float


@dataclass
class EpiParams:
    """One sampled mechanistic configuration."""

    population: int
    horizon_days: int
    seed_infected: int
    has_exposed: bool
    has_asym: bool
    has_waning: bool
    has_demography: bool
    has_npi: bool
    has_superspreading: bool
    beta_waves: list          # [(start_day, transmission_rate), ...] sorted by start
    recovery_rate: float
    progression_rate: float   # exposed -> infectious
    waning_rate: float        # recovered -> susceptible
    turnover_rate: float      # per-capita birth rate = death rate
    asym_fraction: float
    asym_infectivity: float   # transmissibility of asymptomatic relative to symptomatic
    seasonal_harmonics: list  # [(amplitude, harmonic, phase), ...]
    dispersion: float         # Gamma shape for daily super-spreading multipliers
    importation_rate: float   # expected imported infections per day
    npi: InterventionSpec | None
    clinical_per_wave: list = field(default_factory=list)  # one ClinicalWave per beta wave

    # Effective values: a disabled mechanism contributes a zero rate, so the
    # analytic formulas below need no case analysis.
    @property
    def effective_turnover(self) -> float:
        return self.turnover_rate if self.has_demography else 0.0

    @property
    def effective_waning(self) -> float:
        return self.waning_rate if self.has_waning else 0.0

    @property
    def effective_asym_fraction(self) -> float:
        return self.asym_fraction if self.has_asym else 0.0

    def wave_index(self, day: int) -> int:
        idx = 0
        for w, (start, _) in enumerate(self.beta_waves):
            if day >= start:
                idx = w
        return idx

    def wave_beta(self, day: int) -> float:
        return self.beta_waves[self.wave_index(day)][1]

    def seasonal_factor(self, day: float) -> float:
        s = 1.0
        for amplitude, harmonic, phase in self.seasonal_harmonics:
            s += amplitude * math.sin(2 * math.pi * harmonic * day / 365.0 + phase)
        return max(SEASONAL_FLOOR, s)

    def wave_beta_series(self, n_days: int) -> np.ndarray:
        starts = np.array([start for start, _ in self.beta_waves])
        betas = np.array([beta for _, beta in self.beta_waves])
        idx = np.searchsorted(starts, np.arange(n_days), side="right") - 1
        return betas[np.maximum(idx, 0)]

    def seasonal_series(self, times: np.ndarray) -> np.ndarray:
        s = np.ones(len(times))
        for amplitude, harmonic, phase in self.seasonal_harmonics:
            s += amplitude * np.sin(2 * np.pi * harmonic * times / 365.0 + phase)
        return np.maximum(SEASONAL_FLOOR, s)


@dataclass
class EpiTrajectory:
    """Latent and surface output of one run; reported series filled in by the
    observation pipeline."""

    susceptible: np.ndarray
    exposed: np.ndarray
    asymptomatic: np.ndarray
    infectious: np.ndarray
    recovered: np.ndarray
    true_cases: np.ndarray       # new infections per day (all routes in)
    true_symptomatic: np.ndarray  # new entries into the symptomatic pool per day
    true_hosp: np.ndarray
    true_deaths: np.ndarray
    rt: np.ndarray
    intervention_log: list       # [(start_day, end_day, reduction_factor), ...]
    params: EpiParams
    reported_cases: np.ndarray | None = None
    reported_hosp: np.ndarray | None = None
    reported_deaths: np.ndarray | None = None
    observation: object | None = None

    @property
    def total_population(self) -> np.ndarray:
        return (self.susceptible + self.exposed + self.asymptomatic
                + self.infectious + self.recovered)


def sample_epi_params(rng, feature_probs: dict | None = None) -> EpiParams:
    """Draw one mechanistic configuration from the engine's prior.

    `feature_probs` overrides the default inclusion probabilities for
    optional mechanisms (keys of DEFAULT_FEATURE_PROBS); values must lie in
    [0, 1].  Setting every value to 0 forces a plain closed SIR model.
    """
    probs = dict(DEFAULT_FEATURE_PROBS)
    if feature_probs:
        unknown = set(feature_probs) - set(probs)
        if unknown:
            raise ParameterError(f"unknown feature keys: {sorted(unknown)}")
        for key, p in feature_probs.items():
            if not 0 <= p <= 1:
                raise ParameterError(f"feature probability {key}={p} outside [0, 1]")
        probs.update(feature_probs)

    def u(name):
        lo, hi = PARAM_RANGES[name]
        return float(rng.uniform(lo, hi))

    has_exposed = bool(rng.random() < probs["exposed"])
    has_asym = bool(rng.random() < probs["asym"])
    has_npi = bool(rng.random() < probs["npi"])
    has_demography = bool(rng.random() < probs["demography"])
    has_waning = bool(rng.random() < probs["waning"])
    has_superspreading = bool(rng.random() < probs["superspreading"])
    has_importation = bool(rng.random() < probs["importation"])

    population = int(LogUniform(*PARAM_RANGES["population"]).sample(rng))
    horizon = int(rng.integers(365, 731))
    seed_infected = int(rng.integers(1, 11))

    n_waves = int(rng.integers(1, 6))
    starts = [0]
    if n_waves > 1:
        changes = np.sort(rng.integers(1, horizon, size=n_waves - 1))
        starts += [int(c) for c in changes]
    beta_waves = [(start, u("transmission_rate")) for start in starts]
    clinical = [
        ClinicalWave(u("p_hosp"), u("p_death_given_hosp"),
                     u("hosp_delay_mean"), u("death_delay_mean"))
        for _ in starts
    ]

    n_harmonics = int(rng.integers(1, 5))
    harmonics = [
        (u("seasonal_amplitude"), k, float(rng.uniform(0, 2 * math.pi)))
        for k in range(1, n_harmonics + 1)
    ]

    npi = None
    if has_npi:
        trigger = u("npi_trigger_frac") * population
        relax = u("npi_relax_frac") * population
        while not relax < trigger:
            relax = u("npi_relax_frac") * population
        npi = InterventionSpec(
            trigger_threshold=trigger,
            relax_threshold=relax,
            reduction_factor=u("npi_reduction"),
            min_duration_days=int(rng.integers(PARAM_RANGES["npi_min_duration"][0],
                                               PARAM_RANGES["npi_min_duration"][1] + 1)),
        )

    return EpiParams(
        population=population,
        horizon_days=horizon,
        seed_infected=seed_infected,
        has_exposed=has_exposed,
        has_asym=has_asym,
        has_waning=has_waning,
        has_demography=has_demography,
        has_npi=has_npi,
        has_superspreading=has_superspreading,
        beta_waves=beta_waves,
        recovery_rate=u("recovery_rate"),
        progression_rate=u("progression_rate"),
        waning_rate=u("waning_rate"),
        turnover_rate=u("turnover_rate"),
        asym_fraction=u("asym_fraction"),
        asym_infectivity=u("asym_infectivity"),
        seasonal_harmonics=harmonics,
        dispersion=u("dispersion"),
        importation_rate=(float(LogUniform(*PARAM_RANGES["importation_rate"]).sample(rng))
                          if has_importation else 0.0),
        npi=npi,
        clinical_per_wave=clinical,
    )


def closed_configuration(params: EpiParams) -> EpiParams:
    """Copy of `params` with every population-exchanging process disabled."""
    return replace(params, has_demography=False, has_waning=False, importation_rate=0.0)


def simulate_epidemic(params: EpiParams, rng, steps_per_day: int = 1) -> EpiTrajectory:
    """Run the binomial tau-leaping dynamics and attach clinical outcomes.

    Transitions are binomial draws with per-step probability 1 - exp(-rate*dt)
    taken from start-of-step counts.  `steps_per_day` is the leaping
    resolution: 1 reproduces plain daily stepping; larger values tighten the
    leap condition so the trajectory converges to the continuous-time system
    (used by the deterministic-limit checks).  Output series are always daily.

    Latent series hold the compartment state at the start of each day; event
    series hold counts of events during each day.  Stochastic extinction is a
    valid outcome, not an error.
    """
    if steps_per_day < 1:
        raise ParameterError("steps_per_day must be >= 1")
    T = params.horizon_days
    S = params.population - params.seed_infected
    if S < 0:
        raise ParameterError("seed_infected exceeds population")
    E = A = R = 0
    I = params.seed_infected

    sus = np.zeros(T, dtype=np.int64)
    exp_ = np.zeros(T, dtype=np.int64)
    asym = np.zeros(T, dtype=np.int64)
    inf = np.zeros(T, dtype=np.int64)
    rec = np.zeros(T, dtype=np.int64)
    new_infections = np.zeros(T, dtype=np.int64)
    new_symptomatic = np.zeros(T, dtype=np.int64)

    dt = 1.0 / steps_per_day
    beta_by_day = params.wave_beta_series(T).tolist()
    seasonal = params.seasonal_series(np.arange(T * steps_per_day) * dt).tolist()
    p_recover = -math.expm1(-params.recovery_rate * dt)
    p_progress = -math.expm1(-params.progression_rate * dt)
    p_wane = -math.expm1(-params.effective_waning * dt)
    p_die = -math.expm1(-params.effective_turnover * dt)
    p_asym = params.effective_asym_fraction
    rel_inf = params.asym_infectivity
    has_exposed = params.has_exposed
    has_waning = params.has_waning
    has_demography = params.has_demography
    turnover = params.effective_turnover
    import_rate = params.importation_rate
    binom = rng.binomial
    poisson = rng.poisson
    expm1 = math.expm1

    npi = params.npi if params.has_npi else None
    npi_active = False
    npi_started = 0
    calm_streak = 0
    intervention_log = []

    for t in range(T):
        sus[t], exp_[t], asym[t], inf[t], rec[t] = S, E, A, I, R

        beta_day = beta_by_day[t]
        if npi_active:
            beta_day *= 1.0 - npi.reduction_factor
        if params.has_superspreading:
            # One super-spreading multiplier per day, mean one.
            beta_day *= rng.gamma(params.dispersion, 1.0 / params.dispersion)

        infected_today = 0
        sympt_today = 0
        for sub in range(steps_per_day):
            N = S + E + A + I + R
            if N == 0:
                break
            foi = beta_day * ((I + rel_inf * A) / N) * seasonal[t * steps_per_day + sub]

            # Draws come from start-of-step counts; outflows apply
            # sequentially so no compartment goes negative when several
            # processes drain it.  In closed configurations each compartment
            # has a single outflow and the caps can never bind.
            S0, E0, A0, I0, R0 = S, E, A, I, R
            n_infected = binom(S0, -expm1(-foi * dt)) if S0 > 0 else 0
            S -= n_infected

            if has_exposed:
                E += n_infected
                n_progress = binom(E0, p_progress) if E0 > 0 else 0
                n_to_asym = binom(n_progress, p_asym) if p_asym > 0 and n_progress > 0 else 0
                E -= n_progress
                new_sympt = n_progress - n_to_asym
            else:
                n_to_asym = binom(n_infected, p_asym) if p_asym > 0 and n_infected > 0 else 0
                new_sympt = n_infected - n_to_asym
            A += n_to_asym
            I += new_sympt

            if I0 > 0:
                n_rec_i = min(binom(I0, p_recover), I)
                I -= n_rec_i
                R += n_rec_i
            if A0 > 0:
                n_rec_a = min(binom(A0, p_recover), A)
                A -= n_rec_a
                R += n_rec_a

            if has_waning and R0 > 0:
                n_wane = min(binom(R0, p_wane), R)
                R -= n_wane
                S += n_wane

            if has_demography:
                S += poisson(turnover * N * dt)
                if S0 > 0:
                    S -= min(binom(S0, p_die), S)
                if E0 > 0:
                    E -= min(binom(E0, p_die), E)
                if A0 > 0:
                    A -= min(binom(A0, p_die), A)
                if I0 > 0:
                    I -= min(binom(I0, p_die), I)
                if R0 > 0:
                    R -= min(binom(R0, p_die), R)

            if import_rate > 0 and S > 0:
                # Imports land in the exposed or infectious compartment,
                # drawn from the susceptible pool so the total stays fixed.
                n_imported = min(poisson(import_rate * dt), S)
                if n_imported > 0:
                    S -= n_imported
                    to_inf = binom(n_imported, 0.5) if has_exposed else n_imported
                    E += n_imported - to_inf
                    I += to_inf
                    new_sympt += to_inf
                    n_infected += n_imported

            infected_today += n_infected
            sympt_today += new_sympt

        new_infections[t] = infected_today
        new_symptomatic[t] = sympt_today

        if npi is not None:
            if not npi_active:
                if infected_today > npi.trigger_threshold:
                    npi_active = True
                    npi_started = t
                    calm_streak = 0
            else:
                calm_streak = calm_streak + 1 if infected_today < npi.relax_threshold else 0
                held = t - npi_started + 1
                if held >= npi.min_duration_days and calm_streak >= npi.relax_persistence_days:
                    npi_active = False
                    intervention_log.append((npi_started, t + 1, npi.reduction_factor))

        if import_rate == 0 and E + A + I == 0:
            # Epidemic is over; freeze the remaining days.
            sus[t + 1:] = S
            rec[t + 1:] = R
            break

    if npi is not None and npi_active:
        intervention_log.append((npi_started, T, npi.reduction_factor))

    hosp, deaths = apply_clinical_outcomes(new_symptomatic, params, rng)

    traj = EpiTrajectory(
        susceptible=sus, exposed=exp_, asymptomatic=asym, infectious=inf, recovered=rec,
        true_cases=new_infections, true_symptomatic=new_symptomatic,
        true_hosp=hosp, true_deaths=deaths,
        rt=np.zeros(T),
        intervention_log=intervention_log,
        params=params,
    )
    traj.rt = compute_rt_series(traj, params)
    return traj


def compute_r0(params: EpiParams) -> float:
    """Basic reproduction number from the model structure.

    Equals the spectral radius of the next-generation matrix of the active
    compartment system, using the first-wave transmission rate and the mean
    (unit) seasonal and super-spreading factors.
    """
    beta = params.beta_waves[0][1]
    return _reproduction_number(beta, params)


def _reproduction_number(beta_effective: float, params: EpiParams) -> float:
    mu = params.effective_turnover
    p_a = params.effective_asym_fraction
    mixing = (1.0 - p_a) + params.asym_infectivity * p_a if params.has_asym else 1.0
    r0 = beta_effective * mixing / (params.recovery_rate + mu)
    if params.has_exposed:
        r0 *= params.progression_rate / (params.progression_rate + mu)
    return r0


def compute_rt_series(traj: EpiTrajectory, params: EpiParams) -> np.ndarray:
    """Daily effective reproduction number.

    The analytic formula evaluated with the day's effective transmission rate
    (wave value, seasonal factor, intervention reduction), scaled by the
    susceptible fraction.  Super-spreading enters at its mean of one.
    """
    T = params.horizon_days
    reduction = np.ones(T)
    for start, end, factor in traj.intervention_log:
        reduction[start:end] = 1.0 - factor
    beta_eff = params.wave_beta_series(T) * params.seasonal_series(np.arange(T, dtype=float)) * reduction
    n_total = traj.total_population
    sus_frac = np.divide(traj.susceptible, n_total, out=np.zeros(T), where=n_total > 0)
    return _reproduction_number(1.0, params) * beta_eff * sus_frac


DELAY_GAMMA_SHAPE = 4.0


def delay_day_pmf(mean_days: float, n_days: int) -> np.ndarray:
    """Probability of each whole-day delay 0..n_days-1.

    The delay model is a gamma variable with shape DELAY_GAMMA_SHAPE and the
    given mean, rounded to the nearest day.  The integer shape makes the CDF
    an elementary Erlang sum, so the day probabilities are exact.
    """
    if mean_days <= 0:
        raise ParameterError("mean_days must be positive")
    scale = mean_days / DELAY_GAMMA_SHAPE
    edges = np.arange(n_days + 1) - 0.5
    edges[0] = 0.0
    u = edges / scale
    cdf = 1.0 - np.exp(-u) * (1.0 + u + u * u / 2.0 + u ** 3 / 6.0)
    return np.diff(cdf)


def apply_clinical_outcomes(symptomatic_daily, params: EpiParams, rng):
    """Hospitalization and death series from the daily symptomatic counts.

    Each symptomatic infection hospitalizes with the wave's probability and a
    uniformly chosen subset of each day's hospitalized cohort is fatal with
    the wave's conditional probability.  Event days are offset by gamma
    delays with the wave's stated means; each death day sits at or after the
    individual's hospitalization day, so cumulative deaths never exceed
    cumulative hospitalizations.  Events past the horizon are dropped.

    Delays are drawn as whole-day bin counts (multinomial over the exact
    rounded-gamma day probabilities), which matches per-individual rounded
    gamma draws in distribution at a fraction of the cost.
    """
    symptomatic_daily = np.asarray(symptomatic_daily, dtype=np.int64)
    T = len(symptomatic_daily)
    hosp = np.zeros(T, dtype=np.int64)
    deaths = np.zeros(T, dtype=np.int64)
    starts = [start for start, _ in params.beta_waves] + [T]
    for w, wave in enumerate(params.clinical_per_wave):
        a, b = starts[w], min(starts[w + 1], T)
        if a >= b:
            continue
        n_hosp = rng.binomial(symptomatic_daily[a:b], wave.p_hosp)
        if n_hosp.sum() == 0:
            continue
        n_die = rng.binomial(n_hosp, wave.p_death_given_hosp)
        extra_mean = max(wave.death_delay_mean - wave.hosp_delay_mean, 0.5)
        q_hosp = delay_day_pmf(wave.hosp_delay_mean, T)
        cum_hosp = np.cumsum(q_hosp)

        # Bin the delays one whole-day value at a time: conditional binomial
        # draws across all onset days at once build up the multinomial
        # scatter, and array hypergeometric draws pick which of each day's
        # cohort will die.  Both match per-individual draws in distribution.
        die_by_hosp_day = np.zeros(T, dtype=np.int64)
        nz = np.nonzero(n_hosp)[0]
        i0, i1 = int(nz[0]), int(nz[-1]) + 1
        rem_h = n_hosp[i0:i1].astype(np.int64)
        rem_d = n_die[i0:i1].astype(np.int64)
        a = a + i0
        m = i1 - i0
        for d in range(T):
            if not rem_h.any():
                break
            tail = 1.0 - (cum_hosp[d - 1] if d else 0.0)
            if tail <= 0.0 or a + d >= T:
                break
            c = rng.binomial(rem_h, min(q_hosp[d] / tail, 1.0))
            picked = rng.hypergeometric(c, rem_h - c, rem_d) if rem_d.any() else 0
            rem_h -= c
            rem_d -= picked
            lo = a + d
            n_keep = min(T - lo, m)
            if n_keep > 0:
                hosp[lo:lo + n_keep] += c[:n_keep]
                if np.ndim(picked):
                    die_by_hosp_day[lo:lo + n_keep] += picked[:n_keep]

        nz = np.nonzero(die_by_hosp_day)[0]
        if len(nz) == 0:
            continue
        h0, h1 = int(nz[0]), int(nz[-1]) + 1
        q_die = delay_day_pmf(extra_mean, T)
        cum_die = np.cumsum(q_die)
        rem = die_by_hosp_day[h0:h1].copy()
        for d in range(T):
            if not rem.any():
                break
            tail = 1.0 - (cum_die[d - 1] if d else 0.0)
            if tail <= 0.0:
                break
            lo = h0 + d
            if lo >= T:
                break
            c = rng.binomial(rem, min(q_die[d] / tail, 1.0))
            rem -= c
            n_keep = min(T - lo, h1 - h0)
            deaths[lo:lo + n_keep] += c[:n_keep]
    return hosp, deaths
