import numpy as np
import pytest

from vibrosense.core import ContractError, SplitSpec, TimeSeries, make_rng, split_series
from vibrosense.forecast import (
    Arima,
    AutoRegression,
    ForecastModelConfig,
    MODEL_DEFAULTS,
    RandomForestForecaster,
    SeasonalNaive,
    autoregression_fit,
    best_split_for_feature,
    fit,
    fit_regression_tree,
    rolling_forecast,
)


def series(values):
    return TimeSeries(0.0, 1.0, np.asarray(values, dtype=float))


def gen_ar(coefs, n, seed=0, noise=0.0, y0=1.0):
    rng = make_rng(seed)
    p = len(coefs)
    values = list(rng.normal(size=p)) if y0 is None else [y0] * p
    for _ in range(n - p):
        nxt = sum(c * values[-(j + 1)] for j, c in enumerate(coefs))
        if noise:
            nxt += rng.normal(0.0, noise)
        values.append(nxt)
    return np.array(values)


class TestSeasonalNaive:
    def test_m1_prediction(self):
        model = SeasonalNaive(m=1).fit(series([1, 2, 3, 7]))
        assert model.predict_one_step([5, 6, 7]) == 7.0

    def test_m3_prediction(self):
        model = SeasonalNaive(m=3).fit(series([1, 2, 3, 4, 5, 6]))
        assert model.predict_one_step([4, 5, 6]) == 4.0

    def test_stores_last_season_only(self):
        model = SeasonalNaive(m=3).fit(series(np.arange(20)))
        assert np.array_equal(model.last_season, [17, 18, 19])

    def test_m0_error(self):
        with pytest.raises(ContractError):
            SeasonalNaive(m=0)

    def test_defaults_1_or_10(self):
        assert MODEL_DEFAULTS["seasonal_naive"]["m"] == 1
        ForecastModelConfig("seasonal_naive", {"m": 10})  # accepted


class TestAutoregression:
    def test_ar1_recovers_09(self):
        values = gen_ar([0.9], 200)
        coefs, _ = autoregression_fit(values, p=1)
        assert coefs[0] == pytest.approx(0.9, abs=1e-6)

    def test_ar2_recovers_known_recurrence(self):
        values = gen_ar([0.5, 0.25], 500, y0=None, seed=4)
        coefs, intercept = autoregression_fit(values, p=2)
        assert coefs[0] == pytest.approx(0.5, abs=1e-6)
        assert coefs[1] == pytest.approx(0.25, abs=1e-6)
        assert intercept == pytest.approx(0.0, abs=1e-6)

    def test_constant_fixed_point(self):
        model = AutoRegression(p=2).fit(series([5.0] * 50))
        assert model.predict_one_step([5.0, 5.0]) == pytest.approx(5.0, abs=1e-6)

    def test_predict_linear_recurrence(self):
        model = AutoRegression(p=1)
        model.coefs = np.array([0.9])
        model.intercept = 0.0
        assert model.predict_one_step([1.0, 2.0]) == pytest.approx(1.8, abs=1e-9)

    def test_matches_brute_force_normal_equations(self):
        """Oracle: build the lag design explicitly and solve lstsq."""
        rng = make_rng(11)
        values = gen_ar([0.6, -0.2, 0.1], 400, y0=None, seed=11, noise=0.1)
        p = 3
        coefs, intercept = autoregression_fit(values, p)
        rows = len(values) - p
        design = np.ones((rows, p + 1))
        for j in range(1, p + 1):
            design[:, j] = values[p - j : len(values) - j]
        beta, *_ = np.linalg.lstsq(design, values[p:], rcond=None)
        assert intercept == pytest.approx(beta[0], abs=1e-6)
        assert np.allclose(coefs, beta[1:], atol=1e-6)

    def test_default_p10(self):
        assert MODEL_DEFAULTS["ar"]["p"] == 10

    def test_too_short(self):
        with pytest.raises(ContractError):
            autoregression_fit(np.arange(5.0), p=4)


class TestArima:
    def test_linear_ramp_exact(self):
        values = np.arange(100, dtype=float)
        model = Arima(p=10, d=1).fit(series(values))
        ctx = np.arange(80.0, 95.0)
        assert model.predict_one_step(ctx) == pytest.approx(95.0, abs=1e-9)

    def test_d0_reduces_to_ar(self):
        values = gen_ar([0.7], 200, noise=0.05, seed=2, y0=None)
        arima = Arima(p=4, d=0).fit(series(values))
        ar = AutoRegression(p=4).fit(series(values))
        assert np.array_equal(arima.ar.coefs, ar.coefs)
        assert arima.ar.intercept == ar.intercept

    def test_ma_unsupported(self):
        with pytest.raises(ContractError, match="MA terms unsupported"):
            Arima(p=10, d=1, q=1)

    def test_config_rejects_q(self):
        with pytest.raises(ContractError, match="MA terms unsupported"):
            fit(ForecastModelConfig("arima", {"q": 1}), series(np.arange(50.0)))

    def test_bad_d(self):
        with pytest.raises(ContractError):
            Arima(p=2, d=2)


class TestRegressionTree:
    def test_step_series_split(self):
        """Single tree, depth 1, step series, lag 1: exhaustive-oracle split."""
        values = np.array([0.0] * 50 + [1.0] * 50)
        rows = values[:-1][:, None]
        targets = values[1:]
        tree = fit_regression_tree(rows, targets, max_depth=1, rng=make_rng(0))
        root = 0
        assert tree.feature[root] == 0
        assert tree.threshold[root] == pytest.approx(0.5)
        # left leaf: rows with lag 0 -> targets 49 zeros + one 1; mean = 1/50
        assert tree.value[tree.left[root]] == pytest.approx(1 / 50)
        assert tree.value[tree.right[root]] == pytest.approx(1.0)

    def test_best_split_matches_exhaustive_oracle(self):
        rng = make_rng(5)
        values = rng.normal(size=40)
        targets = rng.normal(size=40)
        got = best_split_for_feature(values, targets)
        assert got is not None
        # oracle: try every midpoint directly
        best_score, best_thr = -np.inf, None
        for thr in (np.sort(values)[1:] + np.sort(values)[:-1]) / 2:
            mask = values <= thr
            if mask.all() or not mask.any():
                continue
            parent = np.sum((targets - targets.mean()) ** 2)
            left = np.sum((targets[mask] - targets[mask].mean()) ** 2)
            right = np.sum((targets[~mask] - targets[~mask].mean()) ** 2)
            score = parent - left - right
            if score > best_score:
                best_score, best_thr = score, thr
        assert got[0] == pytest.approx(best_thr)
        assert got[1] == pytest.approx(best_score)

    def test_constant_feature_none(self):
        assert best_split_for_feature(np.ones(10), np.arange(10.0)) is None


class TestRandomForest:
    def test_constant_series_exact(self):
        model = RandomForestForecaster(n_trees=10, max_depth=3, lag_window=3).fit(
            series([4.0] * 30)
        )
        assert model.predict_one_step([4.0, 4.0, 4.0]) == 4.0

    def test_defaults(self):
        assert MODEL_DEFAULTS["random_forest"]["n_trees"] == 500
        assert MODEL_DEFAULTS["random_forest"]["max_depth"] == 10

    def test_deterministic(self):
        values = gen_ar([0.8], 100, noise=0.1, seed=1, y0=None)
        a = RandomForestForecaster(n_trees=5, max_depth=4, lag_window=4, seed=3).fit(series(values))
        b = RandomForestForecaster(n_trees=5, max_depth=4, lag_window=4, seed=3).fit(series(values))
        ctx = values[-5:]
        assert a.predict_one_step(ctx) == b.predict_one_step(ctx)

    def test_learns_step_signal(self):
        values = np.tile([0.0, 0.0, 0.0, 0.0, 10.0], 30)
        model = RandomForestForecaster(n_trees=20, max_depth=6, lag_window=5, seed=0).fit(
            series(values)
        )
        assert model.predict_one_step([0.0, 0.0, 0.0, 0.0, 10.0]) == pytest.approx(0.0, abs=0.5)
        assert model.predict_one_step([0.0, 10.0, 0.0, 0.0, 0.0]) == pytest.approx(0.0, abs=0.5)


class TestRollingForecast:
    def test_teacher_forcing(self):
        train = series([1, 1, 1, 1, 1])
        model = fit(ForecastModelConfig("seasonal_naive", {"m": 1}), train)
        preds = rolling_forecast(model, train.values, [10.0, 1.0, 1.0])
        # context always uses the true previous observation
        assert np.array_equal(preds, [1.0, 10.0, 1.0])

    def test_empty_test_error(self):
        train = series([1, 1, 1])
        model = fit(ForecastModelConfig("seasonal_naive", {"m": 1}), train)
        with pytest.raises(ContractError, match="empty test"):
            rolling_forecast(model, train.values, [])

    def test_unknown_kind(self):
        with pytest.raises(ContractError, match="unknown model kind"):
            ForecastModelConfig("prophet")

    def test_unknown_hyperparameter(self):
        with pytest.raises(ContractError, match="unknown hyperparameter"):
            ForecastModelConfig("ar", {"trees": 5})
