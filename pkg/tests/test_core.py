"""Domain types, the total training loss, and train/test splitting."""

import numpy as np
import pytest

from quadpower.core import (ContractError, Dataset, FlightSample, LossConfig,
                            SplitSpec, FEATURE_COLUMNS, split, split_indices,
                            total_loss, validate_feature_matrix)
from quadpower.evaluate import mse
from tests.conftest import make_sample, random_dataset


class TestTotalLoss:
    def test_perfect_fit_no_penalty(self):
        cfg = LossConfig(alpha=0.0, lam=0.0)
        assert total_loss([1, 2], [1, 2], [0.0], cfg) == 0.0

    def test_hand_evaluated_value(self):
        # (0-2)^2/1 + 1*|3| + (2/2)*3^2 = 4 + 3 + 9
        cfg = LossConfig(alpha=1.0, lam=2.0)
        assert total_loss([0.0], [2.0], [3.0], cfg) == 16.0

    def test_symmetric_errors(self):
        cfg = LossConfig()
        assert total_loss([5, 5], [4, 6], [], cfg) == 1.0

    def test_matches_mse_when_unpenalized(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=40)
        yhat = rng.normal(size=40)
        cfg = LossConfig(alpha=0.0, lam=0.0)
        assert total_loss(y, yhat, rng.normal(size=5), cfg) == mse(y, yhat)

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            total_loss([1, 2], [1], [0.0], LossConfig())

    def test_empty_input(self):
        with pytest.raises(ContractError):
            total_loss([], [], [0.0], LossConfig())

    def test_negative_penalty_weights_rejected(self):
        with pytest.raises(ContractError):
            LossConfig(alpha=-1.0)
        with pytest.raises(ContractError):
            LossConfig(lam=-0.5)


class TestFlightSample:
    def test_feature_row_order(self):
        s = make_sample()
        row = s.feature_row()
        assert row.shape == (15,)
        assert row[0] == s.mass
        assert tuple(row[1:4]) == s.v
        assert tuple(row[4:7]) == s.a
        assert tuple(row[7:10]) == s.euler
        assert tuple(row[10:13]) == s.euler_rate
        assert tuple(row[13:15]) == s.wind

    def test_nonpositive_mass_rejected(self):
        with pytest.raises(ContractError):
            make_sample(mass=0.0)

    def test_negative_time_rejected(self):
        with pytest.raises(ContractError):
            make_sample(t=-1.0)

    def test_nonfinite_field_rejected(self):
        with pytest.raises(ContractError):
            make_sample(power=float("nan"))
        with pytest.raises(ContractError):
            make_sample(v=(0.0, float("inf"), 0.0))


class TestFeatureMatrix:
    def test_fifteen_columns_required(self):
        with pytest.raises(ContractError):
            validate_feature_matrix(np.zeros((4, 14)))

    def test_nonfinite_entry_located(self):
        X = np.zeros((4, 15))
        X[2, 7] = np.nan
        with pytest.raises(ContractError, match="row 2, column 7"):
            validate_feature_matrix(X)

    def test_column_names_fixed(self):
        assert len(FEATURE_COLUMNS) == 15
        assert FEATURE_COLUMNS[0] == "mass"
        assert FEATURE_COLUMNS[-2:] == ("w_n", "w_e")


class TestSplit:
    def test_cardinality(self):
        tr, te = split_indices(10, SplitSpec(0.7, seed=42))
        assert tr.size == 7 and te.size == 3
        assert set(tr) & set(te) == set()

    def test_determinism(self):
        a = split_indices(10, SplitSpec(0.7, seed=42))
        b = split_indices(10, SplitSpec(0.7, seed=42))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_partition_over_many_seeds(self):
        for seed in range(1000):
            tr, te = split_indices(23, SplitSpec(0.7, seed=seed))
            merged = np.sort(np.concatenate([tr, te]))
            assert np.array_equal(merged, np.arange(23))

    def test_by_flight_keeps_flights_whole(self):
        ds = random_dataset(m=30, n_flights=3)
        tr, te = split_indices(ds.m, SplitSpec(0.7, seed=1, mode="by-flight"),
                               ds.flight_ids)
        train_flights = {ds.flight_ids[i] for i in tr}
        test_flights = {ds.flight_ids[i] for i in te}
        assert train_flights.isdisjoint(test_flights)
        assert tr.size + te.size == ds.m

    def test_by_flight_requires_ids(self):
        with pytest.raises(ContractError):
            split_indices(10, SplitSpec(0.7, seed=0, mode="by-flight"))

    def test_bad_fraction_rejected(self):
        for f in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ContractError):
                SplitSpec(train_fraction=f)

    def test_bad_mode_rejected(self):
        with pytest.raises(ContractError):
            SplitSpec(mode="by-magic")

    def test_split_returns_pairs(self):
        ds = random_dataset(m=20)
        (Xtr, ytr), (Xte, yte) = split(ds.X, ds.y, SplitSpec(0.7, seed=5))
        assert Xtr.shape == (14, 15) and Xte.shape == (6, 15)
        assert ytr.size == 14 and yte.size == 6


class TestDataset:
    def test_take_preserves_bookkeeping(self):
        ds = random_dataset(m=12, n_flights=2)
        sub = ds.take(np.array([0, 3, 5]))
        assert sub.m == 3
        assert sub.flight_ids == tuple(ds.flight_ids[i] for i in (0, 3, 5))
        assert np.array_equal(sub.t, ds.t[[0, 3, 5]])

    def test_row_count_mismatch_rejected(self):
        with pytest.raises(ContractError):
            Dataset(X=np.zeros((3, 15)), y=np.zeros(2),
                    flight_ids=("a", "b", "c"), t=np.arange(3.0))

    def test_arrays_frozen(self):
        ds = random_dataset(m=5)
        with pytest.raises(ValueError):
            ds.X[0, 0] = 99.0
