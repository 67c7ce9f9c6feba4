"""Tabular text I/O for cleaned datasets.

One row per 1 Hz flight sample: flight_id, t, the 15 feature columns in
their fixed order, then measured power. Floats are written with full
round-trip precision so save/load is lossless.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import ContractError, Dataset, FEATURE_COLUMNS

DATASET_HEADER = ("flight_id", "t", *FEATURE_COLUMNS, "power")


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    lines = [",".join(DATASET_HEADER)]
    for i in range(dataset.m):
        vals = [dataset.flight_ids[i], repr(float(dataset.t[i]))]
        vals += [repr(float(v)) for v in dataset.X[i]]
        vals.append(repr(float(dataset.y[i])))
        lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise ContractError(f"dataset file not found: {path}")
    lines = path.read_text().splitlines()
    if not lines:
        raise ContractError(f"dataset file is empty: {path}")
    header = tuple(lines[0].split(","))
    if header != DATASET_HEADER:
        raise ContractError(
            f"{path}: unexpected header; expected {','.join(DATASET_HEADER)}")
    rows = [ln.split(",") for ln in lines[1:] if ln.strip()]
    if not rows:
        raise ContractError(f"{path}: no data rows")
    flight_ids = tuple(r[0] for r in rows)
    data = np.array([[float(v) for v in r[1:]] for r in rows])
    return Dataset(
        X=data[:, 1:-1],
        y=data[:, -1],
        flight_ids=flight_ids,
        t=data[:, 0],
    )
