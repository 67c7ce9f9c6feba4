"""Metrics, grid search, the sensitivity study, and the benchmark table."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadpower.core import ContractError, SplitSpec
from quadpower.evaluate import (BENCHMARK_HYPERPARAMETERS, EvalReport,
                                REPORT_HEADER,
                                SENSITIVITY_REPEATS, SENSITIVITY_SIZES,
                                benchmark_table, evaluate_model, grid_search,
                                mape, mse, prepare_benchmark_datasets, r2,
                                sensitivity_study, write_reports)
from quadpower.learners import RegressorConfig
from tests.conftest import random_dataset


class TestMetrics:
    def test_perfect_prediction(self):
        y = np.array([100.0, 200.0, 300.0])
        assert mse(y, y) == 0.0
        assert mape(y, y) == 0.0
        assert r2(y, y) == 1.0

    def test_mean_predictor_r2_zero(self):
        y = np.array([10.0, 20.0, 30.0, 40.0])
        yhat = np.full(4, y.mean())
        assert r2(y, yhat) == 0.0

    def test_hand_evaluated_pair(self):
        y = np.array([100.0, 200.0])
        yhat = np.array([110.0, 180.0])
        assert mse(y, yhat) == 250.0
        assert mape(y, yhat) == pytest.approx(0.1, rel=1e-15)

    def test_mape_zero_target_rejected(self):
        with pytest.raises(ContractError):
            mape([0.0, 1.0], [1.0, 1.0])

    def test_r2_constant_target_rejected(self):
        with pytest.raises(ContractError):
            r2([5.0, 5.0], [5.0, 6.0])

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            mse([1.0], [1.0, 2.0])

    def test_empty(self):
        with pytest.raises(ContractError):
            mse([], [])

    def test_mse_two_route_agreement(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=200) * 100
        yhat = rng.normal(size=200) * 100
        # independent route: accumulate one residual at a time
        acc = 0.0
        for a, b in zip(y, yhat):
            acc += (a - b) ** 2
        assert mse(y, yhat) == pytest.approx(acc / 200, rel=1e-12)

    @given(st.floats(-1e3, 1e3))
    @settings(max_examples=40, deadline=None)
    def test_joint_shift_invariance(self, c):
        rng = np.random.default_rng(1)
        y = rng.normal(size=30) * 10 + 100
        yhat = y + rng.normal(size=30)
        assert mse(y + c, yhat + c) == pytest.approx(mse(y, yhat), rel=1e-9)
        assert r2(y + c, yhat + c) == pytest.approx(r2(y, yhat), abs=1e-9)

    def test_mape_not_shift_invariant(self):
        y = np.array([100.0, 200.0])
        yhat = np.array([110.0, 180.0])
        assert mape(y + 100, yhat + 100) != pytest.approx(mape(y, yhat))


class TestGridSearch:
    def test_singleton_grid(self):
        ds = random_dataset(m=60)
        res = grid_search("EN", ds.X, ds.y, [{"alpha": 0.1, "beta": 0.01}],
                          K_cv=3)
        assert res.best.hyperparameters["alpha"] == 0.1
        assert len(res.cells) == 1

    def test_planted_depth_recovered(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(200, 15))
        # depth-2 piecewise-constant target in two features
        y = (np.where(X[:, 0] <= 0, 0.0, 20.0)
             + np.where(X[:, 1] <= 0, 0.0, 5.0))
        grid = [{"n_trees": 100, "max_depth": 2, "min_leaf": 1,
                 "feature_subset_ratio": 1.0, "bootstrap": False},
                {"n_trees": 100, "max_depth": 7, "min_leaf": 1,
                 "feature_subset_ratio": 1.0, "bootstrap": False}]
        res = grid_search("RF", X, y, grid, K_cv=3, seed=0)
        assert res.best.hyperparameters["max_depth"] == 2
        assert res.best_score == min(s for _, s in res.cells)

    def test_tie_breaks_to_simpler_config(self):
        ds = random_dataset(m=60)
        # alpha=0 makes beta inert, so both cells score identically
        grid = [{"alpha": 0.0, "beta": 0.1}, {"alpha": 0.0, "beta": 0.01}]
        res = grid_search("EN", ds.X, ds.y, grid, K_cv=3, seed=1)
        scores = [s for _, s in res.cells]
        assert scores[0] == scores[1]
        assert res.best.hyperparameters["beta"] == 0.01

    def test_identical_configs_identical_scores(self):
        ds = random_dataset(m=60)
        grid = [{"alpha": 0.1, "beta": 0.01}, {"alpha": 0.1, "beta": 0.01}]
        res = grid_search("EN", ds.X, ds.y, grid, K_cv=4, seed=2)
        scores = [s for _, s in res.cells]
        assert scores[0] == scores[1]

    def test_empty_grid_rejected(self):
        ds = random_dataset(m=20)
        with pytest.raises(ContractError):
            grid_search("EN", ds.X, ds.y, [], K_cv=3)


class TestSensitivityStudy:
    def test_bookkeeping_shape(self):
        ds = random_dataset(m=250)
        curve = sensitivity_study(ds, variants=("EN",), seed=0,
                                  sizes=(100, 200), repeats=3)
        assert curve.sizes == (100, 200)
        assert curve.scores["EN"].shape == (2, 3)
        assert curve.means["EN"].shape == (2,)

    def test_default_protocol_constants(self):
        assert len(SENSITIVITY_SIZES) == 45
        assert SENSITIVITY_SIZES[0] == 100 and SENSITIVITY_SIZES[-1] == 4500
        assert SENSITIVITY_REPEATS == 50

    def test_too_small_dataset_rejected(self):
        ds = random_dataset(m=50)
        with pytest.raises(ContractError):
            sensitivity_study(ds, variants=("EN",), sizes=(100,), repeats=2)

    def test_determinism(self):
        ds = random_dataset(m=200)
        a = sensitivity_study(ds, variants=("EN",), seed=3, sizes=(100,),
                              repeats=3)
        b = sensitivity_study(ds, variants=("EN",), seed=3, sizes=(100,),
                              repeats=3)
        assert np.array_equal(a.scores["EN"], b.scores["EN"])

    def test_rows_are_plain_floats(self):
        ds = random_dataset(m=200)
        curve = sensitivity_study(ds, variants=("EN",), seed=4, sizes=(100,),
                                  repeats=2)
        rows = curve.to_rows()
        assert rows[0] == "variant,size,mean_r2,std_r2"
        for row in rows[1:]:
            variant, size, mean, std = row.split(",")
            float(mean), float(std)  # parse cleanly
            assert "np." not in row


class TestBenchmark:
    def test_per_aircraft_and_combined_datasets(self):
        ds = random_dataset(m=90, n_flights=3)
        aircraft = tuple("A" if i < 45 else "B" for i in range(90))
        ds = type(ds)(X=ds.X, y=ds.y, flight_ids=ds.flight_ids, t=ds.t,
                      aircraft=aircraft)
        out = prepare_benchmark_datasets(ds, n=30, seed=0)
        assert set(out) == {"A", "B", "Combined"}
        assert out["A"].m == 30 and out["Combined"].m == 30
        assert set(out["A"].aircraft) == {"A"}
        assert set(out["Combined"].aircraft) == {"A", "B"}

    def test_insufficient_samples_rejected(self):
        ds = random_dataset(m=40)
        with pytest.raises(ContractError):
            prepare_benchmark_datasets(ds, n=100)

    def test_benchmark_table_shape(self):
        ds = random_dataset(m=80)
        configs = {"EN": RegressorConfig("EN")}
        reports = benchmark_table(configs, {"D": ds}, SplitSpec(0.7, seed=0))
        assert len(reports) == 2
        assert {r.split for r in reports} == {"training", "testing"}

    def test_benchmark_hyperparameters_are_valid(self):
        assert set(BENCHMARK_HYPERPARAMETERS) == {"EN", "RF", "GBRT", "MLP"}
        for variant, hyper in BENCHMARK_HYPERPARAMETERS.items():
            RegressorConfig(variant, hyper).validate_domains()

    def test_write_reports_format(self, tmp_path):
        r = EvalReport("EN", "D", "testing", 1.5, 0.1, 0.9)
        path = tmp_path / "reports.csv"
        write_reports([r], path)
        lines = path.read_text().splitlines()
        assert lines[0] == REPORT_HEADER
        assert lines[1] == "EN,D,testing,1.5,0.1,0.9"
