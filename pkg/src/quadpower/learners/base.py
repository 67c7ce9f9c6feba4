"""Uniform regressor contract over the four model variants.

`fit_regressor` dispatches on the config variant and returns a
TrainedRegressor whose `predict` is a pure function of its parameters.
Feature standardization (train-split statistics) is applied for the elastic
net and the MLP; trees consume raw features.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..core import ContractError
from . import elastic_net, mlp, tree
from .elastic_net import LinearModel, fit_elastic_net
from .mlp import MlpParams, fit_mlp_core
from .tree import RegressionTree, fit_tree

MODEL_FORMAT = "quadpower-model"
MODEL_VERSION = 1

VARIANTS = ("EN", "RF", "GBRT", "MLP")

# Tunable hyperparameter domains (values outside them are rejected unless the
# config opts out, e.g. for diagnostic fits in tests).
_DOMAINS = {
    "EN": {"alpha": (0.0, 1.0), "beta": {1e-3, 1e-2, 1e-1}},
    "RF": {"n_trees": (100, 1000), "max_depth": (2, 7), "min_leaf": (1, 64)},
    "GBRT": {"n_trees": (100, 1000), "max_depth": (2, 7),
             "learning_rate": {0.1, 0.3, 0.5}, "col_subsample": {0.5, 0.8, 1.0}},
    "MLP": {"n_layers": {1, 2, 3}, "n_neurons": (2, 256),
            "batch_size": {32, 64, 128}},
}

_DEFAULTS = {
    "EN": {"alpha": 0.1, "beta": 1e-2},
    "RF": {"n_trees": 300, "max_depth": 7, "min_leaf": 4,
           "feature_subset_ratio": 1.0 / 3.0, "bootstrap": True},
    "GBRT": {"n_trees": 300, "max_depth": 5, "learning_rate": 0.1,
             "col_subsample": 0.8, "min_leaf": 1},
    "MLP": {"n_layers": 2, "n_neurons": 64, "batch_size": 32,
            "learning_rate": 0.01},
}


@dataclass(frozen=True)
class RegressorConfig:
    variant: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0
    enforce_domains: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ContractError(
                f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        merged = dict(_DEFAULTS[self.variant])
        merged.update(self.hyperparameters)
        object.__setattr__(self, "hyperparameters", merged)
        if self.enforce_domains:
            self.validate_domains()

    def validate_domains(self) -> None:
        for name, domain in _DOMAINS[self.variant].items():
            val = self.hyperparameters[name]
            if isinstance(domain, tuple):
                lo, hi = domain
                if not (lo <= val <= hi):
                    raise ContractError(
                        f"{self.variant} hyperparameter {name}={val} outside "
                        f"tunable domain [{lo}, {hi}]")
            elif val not in domain:
                raise ContractError(
                    f"{self.variant} hyperparameter {name}={val} not in "
                    f"tunable domain {sorted(domain)}")

    def complexity_key(self) -> tuple:
        """Sort key for tie-breaking equal scores toward the simpler model."""
        h = self.hyperparameters
        if self.variant == "EN":
            return (-h["alpha"], h["beta"])  # stronger shrinkage is simpler
        if self.variant == "RF":
            return (h["n_trees"], h["max_depth"], -h["min_leaf"])
        if self.variant == "GBRT":
            return (h["n_trees"], h["max_depth"], h["learning_rate"],
                    h["col_subsample"])
        return (h["n_layers"], h["n_neurons"], h["batch_size"])

    def to_dict(self) -> dict:
        return {"variant": self.variant, "seed": self.seed,
                "hyperparameters": dict(self.hyperparameters)}

    @classmethod
    def from_dict(cls, d: dict) -> "RegressorConfig":
        return cls(variant=d["variant"], seed=int(d.get("seed", 0)),
                   hyperparameters=dict(d.get("hyperparameters", {})),
                   enforce_domains=False)


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    scale: np.ndarray
    y_mean: float = 0.0
    y_scale: float = 1.0

    @classmethod
    def fit(cls, X, y=None, standardize_y=False) -> "Standardization":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        if standardize_y and y is not None:
            ys = float(np.std(y))
            return cls(mean, scale, float(np.mean(y)), ys if ys > 0 else 1.0)
        return cls(mean, scale)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist(),
                "y_mean": self.y_mean, "y_scale": self.y_scale}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardization":
        return cls(np.array(d["mean"]), np.array(d["scale"]),
                   float(d["y_mean"]), float(d["y_scale"]))


@dataclass(frozen=True)
class TrainedRegressor:
    config: RegressorConfig
    n_features: int
    standardization: Standardization | None
    params: object  # LinearModel | list[RegressionTree] | GbrtParams | MlpParams

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ContractError(
                f"expected {self.n_features} feature columns, got shape {X.shape}")
        v = self.config.variant
        if v == "EN":
            return self.params.predict(self.standardization.transform(X))
        if v == "RF":
            preds = np.stack([t.predict(X) for t in self.params])
            return preds.mean(axis=0)
        if v == "GBRT":
            return self.params.predict(X)
        Z = self.standardization.transform(X)
        out = mlp.predict(self.params, Z)
        return out * self.standardization.y_scale + self.standardization.y_mean

    def describe(self) -> dict:
        d = {"variant": self.config.variant,
             "hyperparameters": dict(self.config.hyperparameters),
             "seed": self.config.seed, "n_features": self.n_features}
        if self.config.variant in ("RF",):
            d["n_trees"] = len(self.params)
        if self.config.variant == "GBRT":
            d["n_trees"] = len(self.params.trees)
        return d

    def to_dict(self) -> dict:
        v = self.config.variant
        if v == "EN":
            params = self.params.to_dict()
        elif v == "RF":
            params = {"trees": [t.to_dict() for t in self.params]}
        else:
            params = self.params.to_dict()
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": self.config.to_dict(),
            "n_features": self.n_features,
            "standardization": (self.standardization.to_dict()
                                if self.standardization else None),
            "parameters": params,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedRegressor":
        if d.get("format") != MODEL_FORMAT:
            raise ContractError("not a model document")
        if d.get("version") != MODEL_VERSION:
            raise ContractError(f"unsupported model version {d.get('version')}")
        config = RegressorConfig.from_dict(d["config"])
        std = (Standardization.from_dict(d["standardization"])
               if d["standardization"] else None)
        v = config.variant
        if v == "EN":
            params = LinearModel.from_dict(d["parameters"])
        elif v == "RF":
            params = [RegressionTree.from_dict(t)
                      for t in d["parameters"]["trees"]]
        elif v == "GBRT":
            params = GbrtParams.from_dict(d["parameters"])
        else:
            params = MlpParams.from_dict(d["parameters"])
        return cls(config=config, n_features=int(d["n_features"]),
                   standardization=std, params=params)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TrainedRegressor":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class GbrtParams:
    base_score: float
    learning_rate: float
    trees: list

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            out += self.learning_rate * t.predict(X)
        return out

    def to_dict(self) -> dict:
        return {"base_score": self.base_score,
                "learning_rate": self.learning_rate,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "GbrtParams":
        return cls(float(d["base_score"]), float(d["learning_rate"]),
                   [RegressionTree.from_dict(t) for t in d["trees"]])


def fit_random_forest(X, y, config: RegressorConfig,
                      _bootstrap_indices=None) -> TrainedRegressor:
    """Bagged regression trees; prediction is the mean over trees.

    ``_bootstrap_indices`` lets tests inject exact resamples.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    h = config.hyperparameters
    m = y.size
    n_trees = int(h["n_trees"])
    seeds = np.random.SeedSequence(config.seed).generate_state(2 * n_trees)
    trees = []
    for k in range(n_trees):
        if _bootstrap_indices is not None:
            idx = np.asarray(_bootstrap_indices[k])
        elif h.get("bootstrap", True):
            idx = np.random.default_rng(seeds[2 * k]).integers(0, m, m)
        else:
            idx = np.arange(m)
        trees.append(fit_tree(
            X[idx], y[idx], max_depth=int(h["max_depth"]),
            min_leaf=int(h["min_leaf"]),
            feature_subset_ratio=float(h.get("feature_subset_ratio", 1.0)),
            seed=int(seeds[2 * k + 1])))
    return TrainedRegressor(config=config, n_features=X.shape[1],
                            standardization=None, params=trees)


def fit_gbrt(X, y, config: RegressorConfig) -> TrainedRegressor:
    """Residual boosting with shrinkage and per-tree column subsampling."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    h = config.hyperparameters
    n_trees = int(h["n_trees"])
    lr = float(h["learning_rate"])
    col = float(h["col_subsample"])
    p = X.shape[1]
    n_cols = max(1, int(np.ceil(col * p)))
    seeds = np.random.SeedSequence(config.seed).generate_state(2 * n_trees)
    base = float(np.mean(y))
    pred = np.full(y.size, base)
    trees = []
    for k in range(n_trees):
        if n_cols < p:
            cols = np.sort(np.random.default_rng(seeds[2 * k])
                           .choice(p, size=n_cols, replace=False))
        else:
            cols = None
        t = fit_tree(X, y - pred, max_depth=int(h["max_depth"]),
                     min_leaf=int(h.get("min_leaf", 1)),
                     seed=int(seeds[2 * k + 1]), allowed_features=cols)
        pred += lr * t.predict(X)
        trees.append(t)
    return TrainedRegressor(config=config, n_features=p, standardization=None,
                            params=GbrtParams(base, lr, trees))


def fit_regressor(config: RegressorConfig, X, y,
                  en_tol: float = 1e-6) -> TrainedRegressor:
    """Fit any variant on raw features and raw targets."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    h = config.hyperparameters
    if config.variant == "EN":
        std = Standardization.fit(X)
        model = fit_elastic_net(std.transform(X), y,
                                alpha=float(h["alpha"]), beta=float(h["beta"]),
                                tol=en_tol)
        return TrainedRegressor(config, X.shape[1], std, model)
    if config.variant == "RF":
        return fit_random_forest(X, y, config)
    if config.variant == "GBRT":
        return fit_gbrt(X, y, config)
    std = Standardization.fit(X, y, standardize_y=True)
    params = fit_mlp_core(std.transform(X), (y - std.y_mean) / std.y_scale,
                          n_layers=int(h["n_layers"]),
                          n_neurons=int(h["n_neurons"]),
                          batch_size=int(h["batch_size"]),
                          seed=config.seed,
                          learning_rate=float(h.get("learning_rate", 0.01)))
    return TrainedRegressor(config, X.shape[1], std, params)
