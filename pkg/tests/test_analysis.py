"""Error distribution, per-flight energy accounting, and trace comparison."""

import numpy as np
import pytest

from quadpower.core import ContractError, Dataset
from quadpower.analysis import (DEFAULT_BATTERY_CAPACITY_J, error_distribution,
                                flight_energy_errors, group_by_flight,
                                trace_comparison, write_error_histogram,
                                write_flight_energy, write_trace)
from tests.conftest import StubModel, random_dataset


def _flight_dataset(powers_per_flight: dict) -> Dataset:
    rows, y, fids, t = [], [], [], []
    for fid, powers in powers_per_flight.items():
        for k, p in enumerate(powers):
            rows.append(np.concatenate([[3.68], np.zeros(14)]))
            y.append(p)
            fids.append(fid)
            t.append(float(k))
    return Dataset(X=np.array(rows), y=np.array(y), flight_ids=tuple(fids),
                   t=np.array(t))


class TestErrorDistribution:
    def test_degenerate_zero_spread(self):
        y = np.array([100.0, 200.0])
        dist = error_distribution(y, y)
        assert dist.std == 0.0
        assert dist.frac_within_1std == 1.0
        assert dist.frac_within_2std == 1.0

    def test_two_sigma_fraction_dominates(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=500)
        dist = error_distribution(y, np.zeros(500))
        assert dist.frac_within_2std >= dist.frac_within_1std

    def test_normal_coverage(self):
        rng = np.random.default_rng(1)
        e = rng.standard_normal(100_000)
        dist = error_distribution(e, np.zeros(e.size))
        assert dist.frac_within_1std == pytest.approx(0.683, abs=0.01)
        assert dist.frac_within_2std == pytest.approx(0.954, abs=0.01)

    def test_population_std(self):
        e = np.array([1.0, -1.0, 1.0, -1.0])
        dist = error_distribution(e, np.zeros(4))
        assert dist.std == 1.0  # divide-by-n convention

    def test_fraction_matches_direct_count(self):
        rng = np.random.default_rng(2)
        y = rng.normal(size=1000) * 50
        yhat = y + rng.normal(size=1000) * 5
        dist = error_distribution(y, yhat)
        direct = np.mean(np.abs(dist.errors) <= dist.std)
        assert abs(dist.frac_within_1std - direct) < 1e-12

    def test_histogram_counts_sum_to_n(self):
        rng = np.random.default_rng(3)
        dist = error_distribution(rng.normal(size=321), np.zeros(321))
        assert dist.bin_counts.sum() == 321

    def test_too_short_rejected(self):
        with pytest.raises(ContractError):
            error_distribution([1.0], [1.0])


class TestFlightEnergy:
    def test_perfect_prediction_zero_error(self):
        ds = _flight_dataset({"f0": [100.0] * 60})
        model = StubModel(np.full(60, 100.0))
        results, coverage = flight_energy_errors(model, ds)
        assert len(results) == 1
        assert results[0].error_j == 0.0
        assert results[0].measured_j == 6000.0
        assert coverage == 1.0

    def test_constant_bias_accumulates(self):
        ds = _flight_dataset({"f0": [100.0] * 100})
        model = StubModel(np.full(100, 110.0))
        results, coverage = flight_energy_errors(model, ds)
        assert results[0].error_j == pytest.approx(1000.0)
        assert results[0].error_capacity_fraction == pytest.approx(
            1000.0 / DEFAULT_BATTERY_CAPACITY_J)
        assert coverage == 1.0  # 1000 J is within the 2000 J bound

    def test_coverage_counts_out_of_bound_flights(self):
        ds = _flight_dataset({"f0": [100.0] * 50, "f1": [100.0] * 50})
        pred = np.concatenate([np.full(50, 100.0), np.full(50, 150.0)])
        model = StubModel(pred)
        results, coverage = flight_energy_errors(model, ds)
        # f1 error = 50 W * 50 s = 2500 J, outside the 2000 J default bound
        assert coverage == 0.5

    def test_identity_with_instantaneous_errors(self):
        rng = np.random.default_rng(4)
        ds = _flight_dataset({f"f{i}": rng.uniform(50, 400, 40).tolist()
                              for i in range(8)})
        pred = ds.y + rng.normal(scale=20.0, size=ds.m)
        model = StubModel(pred)
        results, _ = flight_energy_errors(model, ds)
        groups = group_by_flight(ds)
        for r in results:
            idx = groups[r.flight_id]
            expected = float(np.sum(pred[idx] - ds.y[idx]) * 1.0)
            assert r.error_j == expected  # exact, not approximate

    def test_group_by_flight_preserves_order(self):
        ds = _flight_dataset({"a": [100.0, 110.0], "b": [120.0]})
        groups = group_by_flight(ds)
        assert list(groups) == ["a", "b"]
        assert np.array_equal(groups["a"], [0, 1])


class TestTraceComparison:
    def test_lengths_aligned(self):
        ds = _flight_dataset({"f0": list(np.linspace(100.0, 200.0, 30))})
        model = StubModel(np.full(30, 90.0))
        trace = trace_comparison(model, ds, "stub")
        assert trace.prediction.size == trace.ground_truth.size == 30
        assert trace.flight_id == "f0"

    def test_multiple_flights_rejected(self):
        ds = _flight_dataset({"f0": [100.0] * 5, "f1": [100.0] * 5})
        with pytest.raises(ContractError, match="one flight"):
            trace_comparison(StubModel(np.zeros(10)), ds)

    def test_training_flight_rejected(self):
        ds = _flight_dataset({"f0": [100.0, 110.0, 120.0]})
        with pytest.raises(ContractError, match="seen in training"):
            trace_comparison(StubModel(np.zeros(3)), ds,
                             trained_flight_ids=("f0", "f9"))


class TestWriters:
    def test_error_histogram_file(self, tmp_path):
        rng = np.random.default_rng(5)
        dist = error_distribution(rng.normal(size=100), np.zeros(100))
        path = tmp_path / "hist.csv"
        write_error_histogram(dist, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "bin_left,bin_right,count"
        assert lines[-1].startswith("# mean=")
        assert "np." not in path.read_text()

    def test_flight_energy_file(self, tmp_path):
        ds = _flight_dataset({"f0": [100.0] * 10})
        results, coverage = flight_energy_errors(StubModel(np.full(10, 105.0)),
                                                 ds)
        path = tmp_path / "energy.csv"
        write_flight_energy(results, coverage, 2000.0, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("flight_id,")
        assert lines[1].startswith("f0,")
        assert lines[-1] == f"# fraction_within_2000J={coverage!r}"

    def test_trace_file(self, tmp_path):
        ds = _flight_dataset({"f0": [100.0, 120.0, 110.0, 130.0, 105.0]})
        trace = trace_comparison(StubModel(np.full(5, 99.0)), ds, "stub")
        path = tmp_path / "trace.csv"
        write_trace(trace, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,ground_truth_w,prediction_w"
        assert len(lines) == 6
        assert "np." not in path.read_text()
