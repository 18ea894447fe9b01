"""Surveillance artifacts: reporting ramp, delay, weekday texture, noise.

True daily series become reported series through four stages applied in a
fixed order: binomial underreporting with a logistically rising detection
probability (case counts only), a shifted-geometric reporting delay, per
weekday multipliers, and mean-one multiplicative lognormal noise.  All
stages return integer series and never produce negative counts.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

REPORT_RATE_INITIAL_RANGE = (0.05, 0.40)
REPORT_RATE_FINAL_RANGE = (0.25, 0.85)
LOGISTIC_MIDPOINT_FRAC_RANGE = (0.2, 0.7)
DELAY_MODE_CHOICES = (0, 1, 2, 3)
DELAY_SUCCESS_PROB = 0.5
WEEKDAY_EFFECT_SD = 0.05
NOISE_SIGMA_CASES_RANGE = (0.15, 0.25)
NOISE_SIGMA_HOSP_RANGE = (0.10, 0.15)
NOISE_SIGMA_DEATHS_RANGE = (0.05, 0.10)


@dataclass(frozen=True)
class ObservationSpec:
    """Reporting process for one simulated outbreak."""

    report_rate_initial: float
    report_rate_final: float
    logistic_midpoint_frac: float
    logistic_steepness: float      # per day
    delay_mode_days: int
    delay_success_prob: float
    weekday_effects: tuple         # 7 positive multipliers, day 0 = weekday 0
    noise_sigma_cases: float
    noise_sigma_hosp: float
    noise_sigma_deaths: float

    def __post_init__(self):
        for name in ("report_rate_initial", "report_rate_final", "delay_success_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must be in [0, 1], got {v}")
        if self.report_rate_final < self.report_rate_initial:
            raise ParameterError("report_rate_final must be >= report_rate_initial")
        if self.delay_success_prob == 0.0:
            raise ParameterError("delay_success_prob must be positive")
        if self.delay_mode_days < 0:
            raise ParameterError("delay_mode_days must be >= 0")
        if len(self.weekday_effects) != 7 or any(e <= 0 for e in self.weekday_effects):
            raise ParameterError("weekday_effects must be 7 positive multipliers")
        for name in ("noise_sigma_cases", "noise_sigma_hosp", "noise_sigma_deaths"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")


def sample_observation_spec(rng, horizon_days: int) -> ObservationSpec:
    """Draw one reporting process from the documented ranges.

    The final report rate is resampled until it is at least the initial rate
    (the ranges overlap), and the logistic steepness is set so the ramp
    completes within the run.
    """
    r0 = float(rng.uniform(*REPORT_RATE_INITIAL_RANGE))
    r1 = float(rng.uniform(*REPORT_RATE_FINAL_RANGE))
    while r1 < r0:
        r1 = float(rng.uniform(*REPORT_RATE_FINAL_RANGE))
    effects = rng.normal(1.0, WEEKDAY_EFFECT_SD, 7)
    while np.any(effects <= 0):
        effects = rng.normal(1.0, WEEKDAY_EFFECT_SD, 7)
    return ObservationSpec(
        report_rate_initial=r0,
        report_rate_final=r1,
        logistic_midpoint_frac=float(rng.uniform(*LOGISTIC_MIDPOINT_FRAC_RANGE)),
        logistic_steepness=10.0 / horizon_days,
        delay_mode_days=int(rng.integers(0, len(DELAY_MODE_CHOICES))),
        delay_success_prob=DELAY_SUCCESS_PROB,
        weekday_effects=tuple(float(e) for e in effects),
        noise_sigma_cases=float(rng.uniform(*NOISE_SIGMA_CASES_RANGE)),
        noise_sigma_hosp=float(rng.uniform(*NOISE_SIGMA_HOSP_RANGE)),
        noise_sigma_deaths=float(rng.uniform(*NOISE_SIGMA_DEATHS_RANGE)),
    )


def detection_probability(spec: ObservationSpec, n_days: int) -> np.ndarray:
    """Daily case-detection probability: logistic rise from the initial to
    the final report rate, centered at the midpoint fraction of the run."""
    t = np.arange(n_days)
    midpoint = spec.logistic_midpoint_frac * n_days
    ramp = 1.0 / (1.0 + np.exp(-spec.logistic_steepness * (t - midpoint)))
    return spec.report_rate_initial + (spec.report_rate_final - spec.report_rate_initial) * ramp


def apply_underreporting(series, spec: ObservationSpec, rng) -> np.ndarray:
    """Binomial thinning with the day's detection probability."""
    series = _as_counts(series)
    return rng.binomial(series, detection_probability(spec, len(series)))


def apply_reporting_delay(series, spec: ObservationSpec, rng) -> np.ndarray:
    """Scatter each day's count over reporting delays.

    The delay is the mode plus a geometric number of extra days, so each
    pending count moves on each subsequent day with the success probability
    (memoryless chain); anything still pending past the horizon is dropped.
    """
    series = _as_counts(series)
    T = len(series)
    out = np.zeros(T, dtype=np.int64)
    p = spec.delay_success_prob
    remaining = series.copy()
    d = spec.delay_mode_days
    while d < T and remaining.any():
        n = T - d
        remaining[n:] = 0  # onset days that can no longer land inside the horizon
        landed = rng.binomial(remaining, p)
        out[d:] += landed[:n]
        remaining -= landed
        d += 1
    return out


def apply_weekday_effects(series, effects) -> np.ndarray:
    """Scale each day by its weekday multiplier; round half to even."""
    effects = np.asarray(effects, dtype=float)
    if len(effects) != 7 or np.any(effects <= 0):
        raise ParameterError("effects must be 7 positive multipliers")
    series = _as_counts(series)
    scaled = series * effects[np.arange(len(series)) % 7]
    return np.maximum(np.round(scaled), 0).astype(np.int64)


def apply_multiplicative_noise(series, sigma: float, rng) -> np.ndarray:
    """Mean-one lognormal daily noise; round half to even."""
    if sigma < 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    series = _as_counts(series)
    factors = rng.lognormal(-sigma * sigma / 2.0, sigma, len(series))
    return np.maximum(np.round(series * factors), 0).astype(np.int64)


def observe(true_cases, true_hosp, true_deaths, spec: ObservationSpec, rng):
    """Full reporting pipeline for the three surveillance streams.

    Cases are thinned by the detection ramp; all three streams then pass
    through delay, weekday effects, and stream-specific noise (cases
    noisiest, deaths cleanest).
    """
    reported = []
    for series, thinned, sigma in (
        (true_cases, True, spec.noise_sigma_cases),
        (true_hosp, False, spec.noise_sigma_hosp),
        (true_deaths, False, spec.noise_sigma_deaths),
    ):
        s = _as_counts(series)
        if thinned:
            s = apply_underreporting(s, spec, rng)
        s = apply_reporting_delay(s, spec, rng)
        s = apply_weekday_effects(s, spec.weekday_effects)
        s = apply_multiplicative_noise(s, sigma, rng)
        reported.append(s)
    return tuple(reported)


def _as_counts(series) -> np.ndarray:
    arr = np.asarray(series, dtype=np.int64)
    if arr.ndim != 1:
        raise ParameterError("series must be one-dimensional")
    if np.any(arr < 0):
        raise ParameterError("series must be non-negative")
    return arr
