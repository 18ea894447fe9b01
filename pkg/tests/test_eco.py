"""Ecology generators against closed-form and root-finder oracles."""
import dataclasses

import numpy as np
import pytest

from sgnn_forge.eco import (
    ButterflyParams,
    EcoTrajectory,
    LynxHareParams,
    environment_multipliers,
    observe_counts,
    sample_butterfly_community,
    sample_lynx_hare,
    sample_survey_counts,
    simulate_butterfly,
    simulate_lynx_hare,
)
from sgnn_forge.errors import IntegrationError, ParameterError
from sgnn_forge.stochastics import substream

from oracles import decay_solution, logistic_solution, lynx_hare_equilibrium


def single_species(r=0.3, n0=100.0, k=250.0, horizon=100):
    return ButterflyParams(
        n_species=1,
        growth_rates=np.array([r]),
        initial_abundance=np.array([n0]),
        capacity=np.array([k]),
        competition=np.zeros((1, 1)),
        seasonal_amplitude=0.0,
        horizon_years=horizon,
    )


def flat_lynx_hare(**overrides):
    base = dict(hare_growth=0.5, hare_capacity=100.0, predation_rate=0.03,
                conversion_rate=0.035, lynx_mortality=1.2, lynx_self_limit=0.001,
                hare_init=40.0, lynx_init=15.0)
    base.update(overrides)
    return LynxHareParams(**base)


class TestButterflyPrior:
    def test_sampled_ranges(self):
        rng = substream(601, 0)
        species_seen = set()
        alphas = []
        for _ in range(400):
            p = sample_butterfly_community(rng)
            species_seen.add(p.n_species)
            assert 2 <= p.n_species <= 32
            assert np.all((p.growth_rates >= 0.15) & (p.growth_rates <= 0.4))
            assert np.all((p.initial_abundance >= 10**1.7) & (p.initial_abundance <= 10**2.4))
            ratio = p.capacity / p.initial_abundance
            assert np.all((ratio >= 1.5) & (ratio <= 2.5))
            assert np.all(np.diag(p.competition) == 0)
            assert np.all(p.competition >= 0)
            assert 0.0 <= p.seasonal_phase <= 1.0
            off = ~np.eye(p.n_species, dtype=bool)
            alphas.append(p.competition[off])
        assert species_seen == set(range(2, 33))
        pooled = np.concatenate(alphas)
        assert abs(pooled.mean() - 0.03) < 0.002

    def test_invalid_construction_rejected(self):
        with pytest.raises(ParameterError):
            single_species().__class__(
                n_species=0, growth_rates=np.array([]), initial_abundance=np.array([]),
                capacity=np.array([]), competition=np.zeros((0, 0)))
        p = single_species()
        with pytest.raises(ParameterError):
            dataclasses.replace(p, competition=np.full((1, 1), 0.1))
        with pytest.raises(ParameterError):
            dataclasses.replace(p, growth_rates=np.array([0.2, 0.3]))


class TestButterflyDeterministic:
    def test_matches_closed_form_logistic(self):
        p = single_species(r=0.22, n0=80.0, k=190.0)
        traj = simulate_butterfly(p, environment=False, process_noise=False,
                                  observation=False)
        expected = logistic_solution(80.0, 0.22, 190.0, np.arange(100))
        rel = np.abs(traj.latent[0] / expected - 1.0)
        assert rel.max() < 0.005

    def test_reaches_capacity_by_year_60(self):
        p = single_species(r=0.15, n0=50.0, k=125.0)
        traj = simulate_butterfly(p, environment=False, process_noise=False,
                                  observation=False)
        assert abs(traj.latent[0, 60] / 125.0 - 1.0) < 0.01
        assert abs(traj.latent[0, 99] / 125.0 - 1.0) < 0.01

    def test_deterministic_runs_bit_identical(self):
        rng = substream(601, 1)
        p = sample_butterfly_community(rng)
        a = simulate_butterfly(p, environment=False, process_noise=False,
                               observation=False)
        b = simulate_butterfly(p, environment=False, process_noise=False,
                               observation=False)
        assert np.array_equal(a.latent, b.latent)
        assert np.array_equal(a.observed_log10, b.observed_log10)

    def test_stronger_competition_never_helps(self):
        rng = substream(601, 2)
        for _ in range(5):
            p = sample_butterfly_community(rng)
            base = simulate_butterfly(p, environment=False, process_noise=False,
                                      observation=False)
            i, j = 0, 1
            bumped = p.competition.copy()
            bumped[i, j] += 0.05
            p2 = dataclasses.replace(p, competition=bumped)
            out = simulate_butterfly(p2, environment=False, process_noise=False,
                                     observation=False)
            assert out.latent[i, -1] <= base.latent[i, -1] + 1e-9

    def test_divergent_dynamics_raise(self):
        p = single_species(r=0.3)
        p = dataclasses.replace(p, growth_rates=np.array([5e4]))
        with pytest.raises(IntegrationError):
            simulate_butterfly(p, environment=False, process_noise=False,
                               observation=False)

    def test_missing_generator_rejected(self):
        with pytest.raises(ParameterError):
            simulate_butterfly(single_species())


class TestButterflyStochastic:
    def test_environment_multipliers_mean_one(self):
        rng = substream(601, 3)
        p = sample_butterfly_community(rng)
        for _ in range(10):
            mult = environment_multipliers(p, rng)
            assert mult.shape == (100,)
            assert np.all(mult > 0)
            assert abs(mult.mean() - 1.0) < 1e-12

    def test_full_pipeline_shapes_and_bounds(self):
        rng = substream(601, 4)
        for _ in range(15):
            p = sample_butterfly_community(rng)
            traj = simulate_butterfly(p, rng)
            assert isinstance(traj, EcoTrajectory)
            assert traj.latent.shape == (p.n_species, 100)
            assert traj.observed_log10.shape == (p.n_species, 100)
            assert np.all(traj.latent >= 0)
            assert np.all(np.isfinite(traj.latent))
            assert np.all(np.isfinite(traj.observed_log10))
            assert traj.params is p


class TestSurveyCounts:
    def test_overdispersed_variance(self):
        rng = substream(601, 5)
        counts = sample_survey_counts(np.full(200_000, 100.0), rng)
        assert abs(counts.mean() - 100.0) < 1.0
        expected_var = 100.0 + 100.0**2 / 2000.0
        assert abs(counts.var(ddof=1) / expected_var - 1.0) < 0.05

    def test_zero_latent_gives_zero_counts(self):
        rng = substream(601, 6)
        assert np.all(sample_survey_counts(np.zeros(100), rng) == 0)

    def test_negative_latent_rejected(self):
        with pytest.raises(ParameterError):
            sample_survey_counts(np.array([-1.0]), substream(601, 7))

    def test_observation_is_log_scale(self):
        rng = substream(601, 8)
        obs = observe_counts(np.full(50_000, 1000.0), rng)
        assert abs(obs.mean() - np.log10(1001.0)) < 0.01


class TestLynxHarePrior:
    def test_sampled_ranges(self):
        rng = substream(602, 0)
        for _ in range(200):
            p = sample_lynx_hare(rng)
            assert 0.4 <= p.hare_growth <= 0.6
            assert 80.0 <= p.hare_capacity <= 120.0
            assert 0.02 <= p.predation_rate <= 0.04
            assert 0.025 <= p.conversion_rate <= 0.04
            assert 1.0 <= p.lynx_mortality <= 2.0
            assert 0.0005 <= p.lynx_self_limit <= 0.002
            assert 20.0 <= p.hare_init <= 80.0
            assert 5.0 <= p.lynx_init <= 30.0

    def test_invalid_construction_rejected(self):
        with pytest.raises(ParameterError):
            flat_lynx_hare(predation_rate=-0.01)
        with pytest.raises(ParameterError):
            flat_lynx_hare(hare_capacity=0.0)


class TestLynxHareDynamics:
    def test_decoupled_limits(self):
        p = flat_lynx_hare(predation_rate=0.0, conversion_rate=0.0,
                           lynx_mortality=1.0, lynx_self_limit=0.001,
                           hare_init=30.0, lynx_init=20.0)
        traj = simulate_lynx_hare(p, demographic_noise=False, observation=False)
        hares, lynx = traj.latent
        years = np.arange(100)
        expected_h = logistic_solution(30.0, 0.5, 100.0, years)
        assert np.abs(hares / expected_h - 1.0).max() < 0.01
        expected_l = decay_solution(20.0, 1.0, 0.001, years)
        visible = expected_l > 1e-3
        assert np.abs(lynx[visible] / expected_l[visible] - 1.0).max() < 0.10
        assert np.all(np.diff(lynx) <= 0)
        assert lynx[30] < 1e-6

    def test_equilibrium_is_held(self):
        rng = substream(602, 1)
        tested = 0
        for _ in range(20):
            p = sample_lynx_hare(rng)
            h_star, l_star = lynx_hare_equilibrium(p)
            if l_star < 0.05 or not (0 < h_star < p.hare_max) or l_star > p.lynx_max:
                continue
            run = dataclasses.replace(p, hare_init=h_star, lynx_init=l_star)
            traj = simulate_lynx_hare(run, demographic_noise=False, observation=False)
            assert np.abs(traj.latent[0] / h_star - 1.0).max() < 0.01
            assert np.abs(traj.latent[1] / l_star - 1.0).max() < 0.01
            tested += 1
        assert tested >= 5

    def test_populations_stay_clamped(self):
        rng = substream(602, 2)
        for _ in range(30):
            p = sample_lynx_hare(rng)
            traj = simulate_lynx_hare(p, rng)
            hares, lynx = traj.latent
            assert np.all((hares >= 0) & (hares <= p.hare_max))
            assert np.all((lynx >= 0) & (lynx <= p.lynx_max))
            assert np.all(np.isfinite(traj.observed_log10))

    def test_noise_free_runs_bit_identical(self):
        p = flat_lynx_hare()
        a = simulate_lynx_hare(p, demographic_noise=False, observation=False)
        b = simulate_lynx_hare(p, demographic_noise=False, observation=False)
        assert np.array_equal(a.latent, b.latent)
        assert np.array_equal(a.observed_log10, b.observed_log10)

    def test_initial_year_matches_inits(self):
        p = flat_lynx_hare()
        traj = simulate_lynx_hare(p, demographic_noise=False, observation=False)
        assert traj.latent[0, 0] == p.hare_init
        assert traj.latent[1, 0] == p.lynx_init

    def test_missing_generator_rejected(self):
        with pytest.raises(ParameterError):
            simulate_lynx_hare(flat_lynx_hare())
