"""Forecast evaluation metrics and analytic estimation baselines.

Scores point and quantile forecasts against a last-value persistence
baseline, summarizes reproduction-number estimates, ranks candidate
labels, and fits early-growth reproduction numbers from case counts.
"""

import numpy as np

from .errors import InsufficientDataError, ParameterError

MIN_GROWTH_FIT_POINTS = 5
DEFAULT_GROWTH_WINDOW_DAYS = 21


def naive_forecast(history, horizon: int) -> np.ndarray:
    """Persistence forecast: repeat the last observed value."""
    history = np.asarray(history, dtype=np.float64)
    if history.size == 0:
        raise ParameterError("naive forecast needs a non-empty history")
    if horizon < 1:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    return np.full(horizon, history[-1], dtype=np.float64)


def mean_absolute_error(forecasts, truths) -> float:
    forecasts = np.asarray(forecasts, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if forecasts.shape != truths.shape:
        raise ParameterError(
            f"forecast shape {forecasts.shape} does not match truth shape {truths.shape}"
        )
    if forecasts.size == 0:
        raise ParameterError("cannot average an empty error set")
    return float(np.mean(np.abs(forecasts - truths)))


def forecasting_skill(model_mae: float, naive_mae: float) -> float:
    """Percent MAE improvement over the persistence baseline.

    Positive when the model beats persistence; a model twice as bad as
    persistence scores -100.
    """
    if naive_mae <= 0.0:
        raise ParameterError(
            f"skill is undefined for non-positive baseline error {naive_mae}"
        )
    return 100.0 * (naive_mae - model_mae) / naive_mae


def pinball_loss(quantile_levels, quantile_forecasts, truths) -> float:
    """Mean quantile loss over levels and time points.

    quantile_forecasts has one row per level, columns aligned with
    truths.  At level 0.5 the loss equals half the absolute error.
    """
    levels = np.asarray(quantile_levels, dtype=np.float64)
    forecasts = np.atleast_2d(np.asarray(quantile_forecasts, dtype=np.float64))
    truths = np.asarray(truths, dtype=np.float64)
    if levels.ndim != 1 or levels.size == 0:
        raise ParameterError("quantile levels must be a non-empty 1-d sequence")
    if np.any(levels <= 0.0) or np.any(levels >= 1.0):
        raise ParameterError("quantile levels must lie strictly inside (0, 1)")
    if np.any(np.diff(levels) <= 0.0):
        raise ParameterError("quantile levels must be strictly increasing")
    if forecasts.shape != (levels.size, truths.size):
        raise ParameterError(
            f"forecast block {forecasts.shape} does not match "
            f"{levels.size} levels x {truths.size} time points"
        )
    gap = truths[np.newaxis, :] - forecasts
    tau = levels[:, np.newaxis]
    loss = np.where(gap >= 0.0, tau * gap, (tau - 1.0) * gap)
    return float(np.mean(loss))


def r0_error_metrics(estimates, truths) -> tuple:
    """(mean squared error, mean absolute percent error) of R0 estimates."""
    estimates = np.asarray(estimates, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if estimates.shape != truths.shape or estimates.size == 0:
        raise ParameterError("estimates and truths must be equal-length and non-empty")
    if np.any(truths <= 0.0):
        raise ParameterError("percent error is undefined for non-positive truths")
    mse = float(np.mean((estimates - truths) ** 2))
    mpe = float(np.mean(np.abs(estimates - truths) / truths) * 100.0)
    return mse, mpe


def topk_accuracy(rankings, true_labels, k: int) -> float:
    """Fraction of cases whose true label appears in the top k ranks."""
    if k < 1:
        raise ParameterError(f"k must be positive, got {k}")
    labels = list(true_labels)
    ranked = list(rankings)
    if len(ranked) != len(labels) or not labels:
        raise ParameterError("rankings and labels must be equal-length and non-empty")
    hits = sum(int(label) in np.asarray(ranking)[:k]
               for ranking, label in zip(ranked, labels))
    return hits / len(labels)


def fit_exp_growth_rate(early_cases) -> float:
    """Exponential growth rate from a least-squares log-linear fit.

    Zero counts carry no log information and are dropped; at least
    MIN_GROWTH_FIT_POINTS positive observations must remain.
    """
    cases = np.asarray(early_cases, dtype=np.float64)
    if cases.ndim != 1:
        raise ParameterError("case series must be 1-d")
    days = np.arange(cases.size, dtype=np.float64)
    positive = cases > 0.0
    if np.count_nonzero(positive) < MIN_GROWTH_FIT_POINTS:
        raise InsufficientDataError(
            f"growth fit needs at least {MIN_GROWTH_FIT_POINTS} positive counts, "
            f"got {np.count_nonzero(positive)}"
        )
    t = days[positive]
    log_cases = np.log(cases[positive])
    slope = np.polyfit(t, log_cases, 1)[0]
    return float(slope)


def r0_from_growth(rate: float, latent_mean: float | None,
                   infectious_mean: float) -> float:
    """Reproduction number implied by an early exponential growth rate.

    Uses (1 + r * latent)(1 + r * infectious) when a latent stage exists
    and 1 + r * infectious otherwise.
    """
    if infectious_mean <= 0.0:
        raise ParameterError(f"infectious period must be positive, got {infectious_mean}")
    if latent_mean is not None and latent_mean <= 0.0:
        raise ParameterError(f"latent period must be positive, got {latent_mean}")
    r0 = 1.0 + rate * infectious_mean
    if latent_mean is not None:
        r0 *= 1.0 + rate * latent_mean
    return float(r0)


def evaluate_forecasts(truth_rows, forecast_rows) -> dict:
    """Score forecast rows against truths with a persistence baseline.

    truth_rows: (location, time, value) triples covering both target
    times and forecast issue times (target time minus horizon).
    forecast_rows: (location, target_time, horizon, level_or_none, value)
    with level None for point forecasts.  Point rows feed the skill
    computation; quantile rows feed the pinball summary.  Absolute
    errors pool across locations, horizons, and times before the skill
    ratio; per-location skill is also reported.
    """
    truth = {}
    for location, time, value in truth_rows:
        truth[(str(location), int(time))] = float(value)

    point_errors = []
    naive_errors = []
    per_location: dict = {}
    pinball_terms = []
    n_skipped = 0
    for location, target_time, horizon, level, value in forecast_rows:
        key = (str(location), int(target_time))
        issue_key = (str(location), int(target_time) - int(horizon))
        if key not in truth or issue_key not in truth:
            n_skipped += 1
            continue
        actual = truth[key]
        if level is None:
            model_err = abs(float(value) - actual)
            naive_err = abs(truth[issue_key] - actual)
            point_errors.append(model_err)
            naive_errors.append(naive_err)
            bucket = per_location.setdefault(str(location), ([], []))
            bucket[0].append(model_err)
            bucket[1].append(naive_err)
        else:
            tau = float(level)
            if not 0.0 < tau < 1.0:
                raise ParameterError(f"quantile level {tau} outside (0, 1)")
            gap = actual - float(value)
            pinball_terms.append(tau * gap if gap >= 0.0 else (tau - 1.0) * gap)

    if not point_errors and not pinball_terms:
        raise InsufficientDataError("no forecast rows could be matched to truths")

    report: dict = {"n_scored_point": len(point_errors),
                    "n_scored_quantile": len(pinball_terms),
                    "n_skipped": n_skipped}
    if point_errors:
        model_mae = float(np.mean(point_errors))
        naive_mae = float(np.mean(naive_errors))
        report["model_mae"] = model_mae
        report["naive_mae"] = naive_mae
        report["skill_pct"] = (forecasting_skill(model_mae, naive_mae)
                               if naive_mae > 0.0 else None)
        report["per_location"] = {}
        for location, (model, naive) in sorted(per_location.items()):
            loc_model = float(np.mean(model))
            loc_naive = float(np.mean(naive))
            report["per_location"][location] = {
                "model_mae": loc_model,
                "naive_mae": loc_naive,
                "skill_pct": (forecasting_skill(loc_model, loc_naive)
                              if loc_naive > 0.0 else None),
                "n_scored": len(model),
            }
    if pinball_terms:
        report["pinball_loss"] = float(np.mean(pinball_terms))
    return report
