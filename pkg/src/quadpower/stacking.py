"""Two-layer stacked ensemble: K-fold out-of-fold base predictions feed an
ordinary-least-squares linear meta-model.

Base models are refit on the full training split for inference; the fold
models exist only to produce leakage-free meta-model training features.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ContractError
from .learners import RegressorConfig, TrainedRegressor, fit_regressor, ols_fit

STACK_FORMAT = "quadpower-stacked-model"
STACK_VERSION = 1


def default_base_configs(seed: int = 0) -> list[RegressorConfig]:
    return [
        RegressorConfig("RF", seed=seed),
        RegressorConfig("GBRT", seed=seed + 1),
    ]


def fold_assignment(m: int, K: int, seed: int) -> np.ndarray:
    """Seed-deterministic near-equal partition: fold index per row."""
    if K < 2:
        raise ContractError("need at least 2 folds")
    if m < K:
        raise ContractError(f"cannot make {K} folds from {m} rows")
    rng = np.random.default_rng(seed)
    folds = np.empty(m, dtype=np.int64)
    perm = rng.permutation(m)
    # first m % K folds get the extra row
    sizes = np.full(K, m // K)
    sizes[: m % K] += 1
    pos = 0
    for k, sz in enumerate(sizes):
        folds[perm[pos:pos + sz]] = k
        pos += sz
    return folds


@dataclass(frozen=True)
class OofMatrix:
    """Out-of-fold predictions: one column per base model."""

    values: np.ndarray  # (m, B)
    folds: np.ndarray   # fold index per row
    # bookkeeping for the no-leakage audit: train_folds[b][k] are the folds
    # the model producing fold-k predictions of base b was trained on
    train_folds: tuple

    def __post_init__(self):
        if self.values.shape[0] != self.folds.shape[0]:
            raise ContractError("fold assignment length mismatch")

    @property
    def n_bases(self) -> int:
        return self.values.shape[1]

    def audit_no_leakage(self) -> bool:
        """True iff no row's fold appears in its producing model's train folds."""
        for b in range(self.n_bases):
            for k, trained_on in self.train_folds[b].items():
                if k in trained_on:
                    return False
        present = set(int(f) for f in self.folds)
        for b in range(self.n_bases):
            if set(self.train_folds[b]) != present:
                return False
        return True


def oof_predictions(X, y, base_configs: list[RegressorConfig], K: int,
                    seed: int) -> OofMatrix:
    """K-fold out-of-fold predictions for every base model."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    m = y.size
    folds = fold_assignment(m, K, seed)
    values = np.empty((m, len(base_configs)))
    train_folds = []
    for b, cfg in enumerate(base_configs):
        record = {}
        for k in range(K):
            test_mask = folds == k
            train_mask = ~test_mask
            model = fit_regressor(cfg, X[train_mask], y[train_mask])
            values[test_mask, b] = model.predict(X[test_mask])
            record[k] = frozenset(int(f) for f in np.unique(folds[train_mask]))
        train_folds.append(record)
    return OofMatrix(values=values, folds=folds, train_folds=tuple(train_folds))


@dataclass(frozen=True)
class StackedModel:
    base_configs: tuple
    bases: tuple          # TrainedRegressor per base, refit on all data
    meta_coef: np.ndarray  # one coefficient per base model
    meta_intercept: float
    folds: int
    seed: int
    degenerate_fallback: bool = False

    def predict(self, X) -> np.ndarray:
        """Meta-model applied to the refit base models' predictions."""
        B = np.column_stack([b.predict(X) for b in self.bases])
        return B @ self.meta_coef + self.meta_intercept

    def to_dict(self) -> dict:
        return {
            "format": STACK_FORMAT,
            "version": STACK_VERSION,
            "folds": self.folds,
            "seed": self.seed,
            "degenerate_fallback": self.degenerate_fallback,
            "meta_coef": self.meta_coef.tolist(),
            "meta_intercept": self.meta_intercept,
            "bases": [b.to_dict() for b in self.bases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StackedModel":
        if d.get("format") != STACK_FORMAT:
            raise ContractError("not a stacked-model document")
        if d.get("version") != STACK_VERSION:
            raise ContractError(f"unsupported version {d.get('version')}")
        bases = tuple(TrainedRegressor.from_dict(b) for b in d["bases"])
        return cls(
            base_configs=tuple(b.config for b in bases),
            bases=bases,
            meta_coef=np.array(d["meta_coef"]),
            meta_intercept=float(d["meta_intercept"]),
            folds=int(d["folds"]),
            seed=int(d["seed"]),
            degenerate_fallback=bool(d["degenerate_fallback"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "StackedModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


# base predictions closer than this (relative) are treated as collinear
_DEGENERATE_TOL = 1e-10


def fit_stacked(X, y, base_configs: list[RegressorConfig] | None = None,
                K: int = 5, seed: int = 0) -> StackedModel:
    """Train the full two-layer model on one training split."""
    if base_configs is None:
        base_configs = default_base_configs(seed)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    oof = oof_predictions(X, y, base_configs, K, seed)

    B = oof.values
    centered = B - B.mean(axis=0)
    degenerate = False
    if B.shape[1] > 1:
        # identical base predictions make the meta design singular
        scale = max(float(np.abs(centered).max()), 1.0)
        if np.linalg.matrix_rank(centered / scale, tol=_DEGENERATE_TOL) < B.shape[1]:
            degenerate = True
    if degenerate:
        coef = np.full(B.shape[1], 1.0 / B.shape[1])
        intercept = float(np.mean(y - B @ coef))
    else:
        meta = ols_fit(B, y)
        coef, intercept = meta.coef, meta.intercept

    bases = tuple(fit_regressor(cfg, X, y) for cfg in base_configs)
    return StackedModel(
        base_configs=tuple(base_configs), bases=bases,
        meta_coef=coef, meta_intercept=float(intercept),
        folds=K, seed=seed, degenerate_fallback=degenerate)


def predict_stacked(model: StackedModel, X) -> np.ndarray:
    return model.predict(X)
