"""Dataset text format: lossless round-trips and header validation."""

import numpy as np
import pytest

from quadpower.core import ContractError, FEATURE_COLUMNS
from quadpower.dataio import DATASET_HEADER, read_dataset, write_dataset
from tests.conftest import random_dataset


class TestRoundTrip:
    def test_lossless(self, tmp_path):
        ds = random_dataset(m=40, seed=1)
        path = tmp_path / "dataset.csv"
        write_dataset(ds, path)
        back = read_dataset(path)
        assert np.array_equal(back.X, ds.X)
        assert np.array_equal(back.y, ds.y)
        assert np.array_equal(back.t, ds.t)
        assert back.flight_ids == ds.flight_ids

    def test_column_order_stable(self, tmp_path):
        ds = random_dataset(m=5)
        path = tmp_path / "dataset.csv"
        write_dataset(ds, path)
        header = path.read_text().splitlines()[0].split(",")
        assert tuple(header) == DATASET_HEADER
        assert tuple(header[2:17]) == FEATURE_COLUMNS

    def test_rewrite_is_byte_identical(self, tmp_path):
        ds = random_dataset(m=25, seed=2)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_dataset(ds, a)
        write_dataset(read_dataset(a), b)
        assert a.read_bytes() == b.read_bytes()


class TestValidation:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ContractError, match="not found"):
            read_dataset(tmp_path / "nope.csv")

    def test_wrong_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ContractError, match="header"):
            read_dataset(p)

    def test_header_only(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text(",".join(DATASET_HEADER) + "\n")
        with pytest.raises(ContractError, match="no data rows"):
            read_dataset(p)
