"""Shared domain types: flight samples, datasets, splits, and the training loss."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Fixed feature column order of the model input matrix. Every producer and
# consumer of feature matrices in this package relies on this ordering.
FEATURE_COLUMNS = (
    "mass",
    "v_n", "v_e", "v_d",
    "a_n", "a_e", "a_d",
    "roll", "pitch", "yaw",
    "roll_rate", "pitch_rate", "yaw_rate",
    "w_n", "w_e",
)
N_FEATURES = len(FEATURE_COLUMNS)


class ContractError(ValueError):
    """Raised when an operation's input contract is violated."""


@dataclass(frozen=True)
class FlightSample:
    """One time-aligned record of a flight at 1 Hz.

    Velocities/accelerations are in the earth-fixed NED frame (downward
    positive). Euler angles and their rates are in radians / rad/s, wind is
    the horizontal (north, east) wind velocity in m/s, power in Watts.
    """

    t: float
    mass: float
    v: tuple[float, float, float]
    a: tuple[float, float, float]
    euler: tuple[float, float, float]
    euler_rate: tuple[float, float, float]
    wind: tuple[float, float]
    power: float
    flight_id: str
    aircraft: str = "unknown"

    def __post_init__(self):
        if not (self.mass > 0):
            raise ContractError(f"mass must be positive, got {self.mass}")
        if self.t < 0:
            raise ContractError(f"t must be non-negative, got {self.t}")
        vals = (self.t, self.mass, *self.v, *self.a, *self.euler,
                *self.euler_rate, *self.wind, self.power)
        if not all(math.isfinite(x) for x in vals):
            raise ContractError(f"non-finite field in sample at t={self.t}")

    def feature_row(self) -> np.ndarray:
        """The sample's feature vector in the fixed 15-column order."""
        return np.array(
            [self.mass, *self.v, *self.a, *self.euler, *self.euler_rate, *self.wind],
            dtype=np.float64,
        )


def validate_feature_matrix(X: np.ndarray) -> np.ndarray:
    """Check shape (m, 15) and finiteness; return a float64 C-contiguous view."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != N_FEATURES:
        raise ContractError(
            f"feature matrix must have {N_FEATURES} columns, got shape {X.shape}")
    if not np.isfinite(X).all():
        bad = np.argwhere(~np.isfinite(X))[0]
        raise ContractError(f"non-finite entry at row {bad[0]}, column {bad[1]}")
    return np.ascontiguousarray(X)


def validate_target(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size == 0:
        raise ContractError("target vector is empty")
    if not np.isfinite(y).all():
        raise ContractError("non-finite entry in target vector")
    return y


@dataclass(frozen=True)
class Dataset:
    """A model-ready dataset: features, power targets, and per-row bookkeeping."""

    X: np.ndarray
    y: np.ndarray
    flight_ids: tuple[str, ...]
    t: np.ndarray
    aircraft: tuple[str, ...] = ()

    def __post_init__(self):
        X = validate_feature_matrix(self.X)
        y = validate_target(self.y)
        if X.shape[0] != y.shape[0]:
            raise ContractError("feature/target row counts differ")
        if len(self.flight_ids) != X.shape[0]:
            raise ContractError("flight_ids length mismatch")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", np.asarray(self.t, dtype=np.float64))
        X.setflags(write=False)
        y.setflags(write=False)
        if not self.aircraft:
            object.__setattr__(self, "aircraft", ("unknown",) * X.shape[0])

    @property
    def m(self) -> int:
        return self.X.shape[0]

    def take(self, idx: np.ndarray) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            X=self.X[idx].copy(),
            y=self.y[idx].copy(),
            flight_ids=tuple(self.flight_ids[i] for i in idx),
            t=self.t[idx].copy(),
            aircraft=tuple(self.aircraft[i] for i in idx),
        )


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split configuration; mode is by-sample (default) or by-flight."""

    train_fraction: float = 0.7
    seed: int = 0
    mode: str = "by-sample"  # or "by-flight"

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ContractError(
                f"train_fraction must lie in (0,1), got {self.train_fraction}")
        if self.mode not in ("by-sample", "by-flight"):
            raise ContractError(f"unknown split mode {self.mode!r}")


@dataclass(frozen=True)
class LossConfig:
    """Weights of the L1 and L2 penalty terms in the total training loss."""

    alpha: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.lam < 0:
            raise ContractError("penalty weights must be non-negative")


def total_loss(y, yhat, theta, cfg: LossConfig) -> float:
    """Mean squared error plus L1/L2 penalties on the parameter vector.

    Returns (1/m) * sum((y - yhat)^2) + alpha*||theta||_1 + (lam/2)*||theta||_2^2.
    """
    y = validate_target(y)
    yhat = np.asarray(yhat, dtype=np.float64).reshape(-1)
    if y.shape != yhat.shape:
        raise ContractError(
            f"length mismatch: y has {y.size}, yhat has {yhat.size}")
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if theta.size and not np.isfinite(theta).all():
        raise ContractError("non-finite parameter vector")
    r = y - yhat
    mse = float(np.mean(r * r))
    l1 = float(cfg.alpha * np.sum(np.abs(theta)))
    l2 = float(0.5 * cfg.lam * np.sum(theta * theta))
    return mse + l1 + l2


def split_indices(m: int, spec: SplitSpec,
                  flight_ids: tuple[str, ...] | None = None,
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic train/test index sets.

    By-sample mode draws exactly round(train_fraction * m) training rows.
    By-flight mode assigns whole flights to one side, stopping as soon as the
    training side reaches the target count, so sizes are approximate.
    """
    if m < 2:
        raise ContractError("need at least 2 rows to split")
    rng = np.random.default_rng(spec.seed)
    n_train = int(round(spec.train_fraction * m))
    n_train = min(max(n_train, 1), m - 1)
    if spec.mode == "by-sample":
        perm = rng.permutation(m)
        train = np.sort(perm[:n_train])
        test = np.sort(perm[n_train:])
        return train, test
    if flight_ids is None:
        raise ContractError("by-flight split requires flight_ids")
    ids = np.asarray(flight_ids)
    unique = sorted(set(flight_ids))
    if len(unique) < 2:
        raise ContractError("by-flight split needs at least 2 flights")
    order = rng.permutation(len(unique))
    train_flights: set[str] = set()
    count = 0
    for j in order:
        if count >= n_train:
            break
        train_flights.add(unique[j])
        count += int(np.sum(ids == unique[j]))
    if len(train_flights) == len(unique):  # keep test side non-empty
        train_flights.discard(unique[order[-1]])
    mask = np.array([fid in train_flights for fid in flight_ids])
    return np.flatnonzero(mask), np.flatnonzero(~mask)


def split(X, y, spec: SplitSpec, flight_ids=None):
    """Split (X, y) into ((X_train, y_train), (X_test, y_test))."""
    X = validate_feature_matrix(X)
    y = validate_target(y)
    tr, te = split_indices(X.shape[0], spec, flight_ids)
    return (X[tr], y[tr]), (X[te], y[te])
