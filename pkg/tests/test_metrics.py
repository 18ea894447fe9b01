"""Evaluation metrics and analytic baselines."""

import math

import numpy as np
import pytest

from sgnn_forge.epi import ClinicalWave, EpiParams, simulate_epidemic
from sgnn_forge.errors import InsufficientDataError, ParameterError
from sgnn_forge.metrics import (evaluate_forecasts, fit_exp_growth_rate,
                                forecasting_skill, mean_absolute_error,
                                naive_forecast, pinball_loss, r0_error_metrics,
                                r0_from_growth, topk_accuracy)
from sgnn_forge.stochastics import substream


class TestNaiveForecast:
    def test_repeats_last_value(self):
        assert naive_forecast([3.0, 5.0, 7.0], 4).tolist() == [7.0] * 4

    def test_single_zero_history(self):
        assert naive_forecast([0.0], 3).tolist() == [0.0, 0.0, 0.0]

    def test_empty_history_rejected(self):
        with pytest.raises(ParameterError):
            naive_forecast([], 4)
        with pytest.raises(ParameterError):
            naive_forecast([1.0], 0)


class TestForecastingSkill:
    def test_percent_improvement(self):
        assert forecasting_skill(6.5, 10.0) == 35.0

    def test_matching_baseline_scores_zero(self):
        assert forecasting_skill(4.2, 4.2) == 0.0

    def test_sign_convention_for_worse_than_naive(self):
        assert forecasting_skill(21.2, 10.0) == -112.0

    def test_invariant_to_common_rescale(self):
        assert math.isclose(forecasting_skill(6.5 * 3.7, 10.0 * 3.7),
                            forecasting_skill(6.5, 10.0), rel_tol=1e-12)

    def test_zero_baseline_rejected(self):
        with pytest.raises(ParameterError):
            forecasting_skill(1.0, 0.0)

    def test_naive_against_itself_is_zero(self):
        truths = [4.0, 9.0, 6.0]
        naive_mae = mean_absolute_error(naive_forecast([2.0, 5.0], 3), truths)
        assert forecasting_skill(naive_mae, naive_mae) == 0.0


class TestPinballLoss:
    def test_perfect_quantiles_score_zero(self):
        truths = np.array([4.0, 8.0, 1.0])
        forecasts = np.tile(truths, (3, 1))
        assert pinball_loss([0.1, 0.5, 0.9], forecasts, truths) == 0.0

    def test_median_level_halves_absolute_error(self):
        assert pinball_loss([0.5], [[3.0]], [5.0]) == 1.0

    def test_median_equals_half_mae_exactly(self):
        rng = substream(830, 0)
        truths = rng.normal(0.0, 5.0, 200)
        forecasts = rng.normal(0.0, 5.0, 200)
        half_mae = mean_absolute_error(forecasts, truths) / 2.0
        assert pinball_loss([0.5], forecasts[np.newaxis, :], truths) == half_mae

    def test_matches_direct_formula(self):
        rng = substream(830, 1)
        levels = np.array([0.1, 0.25, 0.5, 0.75, 0.9])
        truths = rng.normal(10.0, 3.0, 40)
        forecasts = rng.normal(10.0, 3.0, (5, 40))
        total = 0.0
        for i, tau in enumerate(levels):
            for j, y in enumerate(truths):
                q = forecasts[i, j]
                total += tau * (y - q) if y >= q else (1.0 - tau) * (q - y)
        expected = total / (5 * 40)
        assert math.isclose(pinball_loss(levels, forecasts, truths), expected,
                            rel_tol=1e-12)

    def test_invalid_levels_and_shapes_rejected(self):
        with pytest.raises(ParameterError):
            pinball_loss([0.5, 0.5], [[1.0], [1.0]], [1.0])
        with pytest.raises(ParameterError):
            pinball_loss([0.0], [[1.0]], [1.0])
        with pytest.raises(ParameterError):
            pinball_loss([0.5], [[1.0, 2.0]], [1.0])


class TestR0ErrorMetrics:
    def test_perfect_estimates(self):
        assert r0_error_metrics([2.5, 1.1], [2.5, 1.1]) == (0.0, 0.0)

    def test_single_case_arithmetic(self):
        assert r0_error_metrics([3.0], [2.0]) == (1.0, 50.0)

    def test_matches_loop_oracle(self):
        rng = substream(830, 2)
        truths = rng.uniform(1.0, 5.0, 100)
        estimates = truths + rng.normal(0.0, 0.5, 100)
        mse = sum((e - t) ** 2 for e, t in zip(estimates, truths)) / 100
        mpe = sum(abs(e - t) / t for e, t in zip(estimates, truths)) / 100 * 100
        got_mse, got_mpe = r0_error_metrics(estimates, truths)
        assert math.isclose(got_mse, mse, rel_tol=1e-12)
        assert math.isclose(got_mpe, mpe, rel_tol=1e-12)

    def test_zero_truth_rejected(self):
        with pytest.raises(ParameterError):
            r0_error_metrics([1.0], [0.0])


class TestTopkAccuracy:
    def test_full_ranking_always_hits(self):
        rankings = [np.arange(10), np.arange(10)]
        assert topk_accuracy(rankings, [7, 2], k=10) == 1.0

    def test_rank_one_truth(self):
        rankings = [np.array([4, 1, 2]), np.array([9, 0, 3])]
        assert topk_accuracy(rankings, [4, 9], k=1) == 1.0

    def test_random_rankings_near_chance(self):
        rng = substream(830, 3)
        rankings = [rng.permutation(1000) for _ in range(2000)]
        labels = rng.integers(0, 1000, 2000)
        rate = topk_accuracy(rankings, labels, k=1)
        assert rate < 0.004

    def test_non_decreasing_in_k(self):
        rng = substream(830, 4)
        rankings = [rng.permutation(50) for _ in range(300)]
        labels = rng.integers(0, 50, 300)
        rates = [topk_accuracy(rankings, labels, k) for k in (1, 5, 20, 50)]
        assert rates == sorted(rates)
        assert rates[-1] == 1.0

    def test_invalid_arguments_rejected(self):
        with pytest.raises(ParameterError):
            topk_accuracy([np.arange(3)], [1], k=0)
        with pytest.raises(ParameterError):
            topk_accuracy([], [], k=1)


class TestExpGrowthFit:
    def test_exact_exponential_recovered(self):
        days = np.arange(21)
        cases = 2.0 * np.exp(0.1 * days)
        assert abs(fit_exp_growth_rate(cases) - 0.1) < 1e-9

    def test_constant_series_gives_zero(self):
        assert abs(fit_exp_growth_rate(np.full(10, 7.0))) < 1e-12

    def test_noisy_exponential_monte_carlo(self):
        rng = substream(830, 5)
        days = np.arange(21)
        errors = []
        for _ in range(1000):
            cases = np.exp(math.log(2.0) + 0.1 * days + rng.normal(0.0, 0.1, 21))
            errors.append(fit_exp_growth_rate(cases) - 0.1)
        assert np.max(np.abs(errors)) < 0.02
        assert abs(np.mean(errors)) < 0.002

    def test_zeros_dropped_matches_subset_oracle(self):
        rng = substream(830, 6)
        cases = np.exp(0.2 * np.arange(15) + rng.normal(0.0, 0.05, 15))
        cases[[2, 5, 11]] = 0.0
        keep = cases > 0
        t = np.arange(15, dtype=float)[keep]
        y = np.log(cases[keep])
        slope = np.sum((t - t.mean()) * (y - y.mean())) / np.sum((t - t.mean()) ** 2)
        assert math.isclose(fit_exp_growth_rate(cases), slope, rel_tol=1e-12)

    def test_too_few_positive_points_rejected(self):
        with pytest.raises(InsufficientDataError):
            fit_exp_growth_rate([0.0, 1.0, 2.0, 0.0, 3.0, 4.0])


class TestR0FromGrowth:
    def test_zero_growth_gives_one(self):
        assert r0_from_growth(0.0, 4.0, 5.0) == 1.0
        assert r0_from_growth(0.0, None, 5.0) == 1.0

    def test_two_stage_arithmetic(self):
        assert math.isclose(r0_from_growth(0.1, 4.0, 5.0), 2.1, rel_tol=1e-12)

    def test_single_stage_form(self):
        assert math.isclose(r0_from_growth(0.1, None, 5.0), 1.5, rel_tol=1e-12)

    def test_invalid_periods_rejected(self):
        with pytest.raises(ParameterError):
            r0_from_growth(0.1, 4.0, 0.0)
        with pytest.raises(ParameterError):
            r0_from_growth(0.1, -1.0, 5.0)

    def test_recovers_simulated_reproduction_number(self):
        # Closed two-stage config with transmission 0.5 and recovery 0.2,
        # so the target reproduction number is 2.5 and the moment formula
        # is exact for the early exponential phase.
        params = EpiParams(
            population=10_000_000, horizon_days=60, seed_infected=200,
            has_exposed=True, has_asym=False, has_waning=False,
            has_demography=False, has_npi=False, has_superspreading=False,
            beta_waves=[(0, 0.5)], recovery_rate=0.2, progression_rate=0.3,
            waning_rate=0.0, turnover_rate=0.0, asym_fraction=0.0,
            asym_infectivity=1.0, seasonal_harmonics=[], dispersion=1.0,
            importation_rate=0.0, npi=None,
            clinical_per_wave=[ClinicalWave(0.05, 0.2, 7.0, 14.0)])
        traj = simulate_epidemic(params, substream(830, 7), steps_per_day=20)
        rate = fit_exp_growth_rate(traj.true_cases[10:31])
        estimate = r0_from_growth(rate, 1.0 / 0.3, 1.0 / 0.2)
        assert abs(estimate - 2.5) / 2.5 < 0.15


class TestEvaluateForecasts:
    TRUTHS = [("A", 0, 10.0), ("A", 1, 12.0), ("A", 2, 16.0),
              ("A", 3, 14.0), ("A", 4, 18.0)]

    def test_pooled_and_per_location_skill(self):
        forecasts = [("A", 2, 1, None, 15.0),
                     ("A", 3, 2, None, 13.0),
                     ("A", 4, 1, None, 19.0),
                     ("B", 2, 1, None, 5.0)]
        report = evaluate_forecasts(self.TRUTHS, forecasts)
        assert report["n_scored_point"] == 3
        assert report["n_skipped"] == 1
        assert math.isclose(report["model_mae"], 1.0, rel_tol=1e-12)
        assert math.isclose(report["naive_mae"], 10.0 / 3.0, rel_tol=1e-12)
        assert math.isclose(report["skill_pct"], 70.0, rel_tol=1e-12)
        assert math.isclose(report["per_location"]["A"]["skill_pct"], 70.0,
                            rel_tol=1e-12)

    def test_quantile_rows_feed_pinball(self):
        forecasts = [("A", 2, 1, 0.5, 14.0), ("A", 2, 1, 0.9, 20.0)]
        report = evaluate_forecasts(self.TRUTHS, forecasts)
        assert report["n_scored_quantile"] == 2
        assert math.isclose(report["pinball_loss"], (1.0 + 0.4) / 2.0,
                            rel_tol=1e-12)

    def test_no_matches_rejected(self):
        with pytest.raises(InsufficientDataError):
            evaluate_forecasts(self.TRUTHS, [("C", 9, 1, None, 1.0)])

    def test_bad_quantile_level_rejected(self):
        with pytest.raises(ParameterError):
            evaluate_forecasts(self.TRUTHS, [("A", 2, 1, 1.5, 14.0)])
