"""Metrics, cross-validated grid search, and the data-size sensitivity study."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .core import ContractError, Dataset, SplitSpec, split_indices
from .learners import RegressorConfig, fit_regressor
from .stacking import fold_assignment

SENSITIVITY_SIZES = tuple(range(100, 4501, 100))
SENSITIVITY_REPEATS = 50

# Fixed empirical hyperparameters used when a study cannot afford tuning.
EMPIRICAL_HYPERPARAMETERS = {
    "EN": {"alpha": 0.1, "beta": 1e-2},
    "RF": {"n_trees": 300, "max_depth": 7, "min_leaf": 4},
    "GBRT": {"n_trees": 300, "max_depth": 5, "learning_rate": 0.1,
             "col_subsample": 0.8},
}

# Hyperparameters for the four-way benchmark table. Tree ensembles and the
# elastic net run at their defaults; the MLP is kept deliberately small so
# its capacity sits between the linear model and the tree ensembles on
# fleet-sized training sets.
BENCHMARK_HYPERPARAMETERS = {
    "EN": {},
    "RF": {},
    "GBRT": {},
    "MLP": {"n_layers": 1, "n_neurons": 2, "batch_size": 128},
}


def _paired(y, yhat):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    yhat = np.asarray(yhat, dtype=np.float64).reshape(-1)
    if y.size == 0:
        raise ContractError("empty target vector")
    if y.shape != yhat.shape:
        raise ContractError(f"length mismatch: {y.size} vs {yhat.size}")
    return y, yhat


def mse(y, yhat) -> float:
    """Mean squared error: (1/n) * sum (y_i - yhat_i)^2."""
    y, yhat = _paired(y, yhat)
    d = y - yhat
    return float(np.mean(d * d))


def mape(y, yhat) -> float:
    """Mean absolute percentage error: (1/n) * sum |(y_i - yhat_i) / y_i|."""
    y, yhat = _paired(y, yhat)
    if np.any(y == 0):
        raise ContractError("mape undefined: target contains zeros")
    return float(np.mean(np.abs((y - yhat) / y)))


def r2(y, yhat) -> float:
    """Coefficient of determination: 1 - SS_res / SS_tot."""
    y, yhat = _paired(y, yhat)
    ybar = np.mean(y)
    ss_tot = float(np.sum((y - ybar) ** 2))
    if ss_tot == 0:
        raise ContractError("r2 undefined: target is constant")
    ss_res = float(np.sum((y - yhat) ** 2))
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class EvalReport:
    model_id: str
    dataset_id: str
    split: str  # "training" or "testing"
    mse: float
    mape: float
    r2: float

    def row(self) -> str:
        return ",".join([self.model_id, self.dataset_id, self.split,
                         repr(self.mse), repr(self.mape), repr(self.r2)])


REPORT_HEADER = "model,dataset,split,mse,mape,r2"


def write_reports(reports: list[EvalReport], path: str | Path) -> None:
    lines = [REPORT_HEADER] + [r.row() for r in reports]
    Path(path).write_text("\n".join(lines) + "\n")


def evaluate_model(model, X, y, model_id: str, dataset_id: str,
                   split: str) -> EvalReport:
    yhat = model.predict(X)
    return EvalReport(model_id, dataset_id, split,
                      mse(y, yhat), mape(y, yhat), r2(y, yhat))


@dataclass(frozen=True)
class GridSearchResult:
    variant: str
    cells: tuple          # (config, cv_mean_mse) per grid cell
    best: RegressorConfig
    best_score: float
    cv_folds: int

    def to_rows(self) -> list[str]:
        out = ["cv_mean_mse,is_best,hyperparameters"]
        for cfg, score in self.cells:
            best = int(cfg is self.best)
            h = ";".join(f"{k}={v}" for k, v in sorted(
                cfg.hyperparameters.items()))
            out.append(f"{score!r},{best},{h}")
        return out


def grid_search(variant: str, X, y, grid: list[dict], K_cv: int = 5,
                seed: int = 0, n_jobs: int = 1) -> GridSearchResult:
    """Score every grid cell by K-fold CV mean MSE on a shared fold partition.

    Ties go to the lower model-complexity config.
    """
    if not grid:
        raise ContractError("empty hyperparameter grid")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    folds = fold_assignment(y.size, K_cv, seed)
    configs = [RegressorConfig(variant, h, seed=seed) for h in grid]

    def score_cell(cfg: RegressorConfig) -> float:
        fold_mse = []
        for k in range(K_cv):
            test = folds == k
            model = fit_regressor(cfg, X[~test], y[~test])
            fold_mse.append(mse(y[test], model.predict(X[test])))
        return float(np.mean(fold_mse))

    if n_jobs != 1:
        scores = Parallel(n_jobs=n_jobs)(delayed(score_cell)(c) for c in configs)
    else:
        scores = [score_cell(c) for c in configs]

    order = sorted(range(len(configs)),
                   key=lambda i: (scores[i], configs[i].complexity_key()))
    best_i = order[0]
    return GridSearchResult(variant=variant,
                            cells=tuple(zip(configs, scores)),
                            best=configs[best_i],
                            best_score=scores[best_i],
                            cv_folds=K_cv)


@dataclass(frozen=True)
class SensitivityCurve:
    sizes: tuple
    scores: dict          # variant -> (n_sizes, n_repeats) array of test R^2
    means: dict           # variant -> (n_sizes,) array
    stds: dict

    def to_rows(self) -> list[str]:
        out = ["variant,size,mean_r2,std_r2"]
        for variant in sorted(self.scores):
            for i, n in enumerate(self.sizes):
                out.append(f"{variant},{n},{float(self.means[variant][i])!r},"
                           f"{float(self.stds[variant][i])!r}")
        return out


def _sensitivity_cell(X, y, n, variants, cell_seed):
    rng = np.random.default_rng(cell_seed)
    take = rng.choice(y.size, size=n, replace=False)
    Xs, ys = X[take], y[take]
    tr, te = split_indices(n, SplitSpec(0.7, seed=int(cell_seed % 2**31)))
    out = {}
    for v in variants:
        cfg = RegressorConfig(v, EMPIRICAL_HYPERPARAMETERS[v],
                              seed=int(cell_seed % 2**31))
        model = fit_regressor(cfg, Xs[tr], ys[tr])
        out[v] = r2(ys[te], model.predict(Xs[te]))
    return out


def sensitivity_study(dataset: Dataset,
                      variants=("EN", "RF", "GBRT"),
                      seed: int = 0,
                      sizes=SENSITIVITY_SIZES,
                      repeats: int = SENSITIVITY_REPEATS,
                      n_jobs: int = 1) -> SensitivityCurve:
    """Repeated-subsampling test-R^2 curves over training-set size.

    For every size, draw ``repeats`` seed-derived subsamples without
    replacement, split each 70/30, fit every variant with its fixed empirical
    hyperparameters, and record the test R^2.
    """
    if dataset.m < max(sizes):
        raise ContractError(
            f"dataset has {dataset.m} rows; study needs {max(sizes)}")
    X, y = dataset.X, dataset.y
    cell_seeds = np.random.SeedSequence(seed).generate_state(
        len(sizes) * repeats, dtype=np.uint64)

    tasks = [(i, r, int(cell_seeds[i * repeats + r]))
             for i in range(len(sizes)) for r in range(repeats)]
    if n_jobs != 1:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_sensitivity_cell)(X, y, sizes[i], variants, s)
            for i, r, s in tasks)
    else:
        results = [_sensitivity_cell(X, y, sizes[i], variants, s)
                   for i, r, s in tasks]

    scores = {v: np.empty((len(sizes), repeats)) for v in variants}
    for (i, r, _), res in zip(tasks, results):
        for v in variants:
            scores[v][i, r] = res[v]
    means = {v: scores[v].mean(axis=1) for v in variants}
    stds = {v: scores[v].std(axis=1) for v in variants}
    return SensitivityCurve(sizes=tuple(sizes), scores=scores,
                            means=means, stds=stds)


def prepare_benchmark_datasets(dataset: Dataset, n: int = 3000,
                               seed: int = 0) -> dict[str, Dataset]:
    """Per-aircraft n-sample datasets plus one combined equal-share dataset."""
    rng = np.random.default_rng(seed)
    types = sorted(set(dataset.aircraft))
    out = {}
    aircraft = np.asarray(dataset.aircraft)
    for name in types:
        idx = np.flatnonzero(aircraft == name)
        if idx.size < n:
            raise ContractError(
                f"aircraft {name!r} has only {idx.size} samples, need {n}")
        out[name] = dataset.take(np.sort(rng.choice(idx, n, replace=False)))
    share = n // len(types)
    parts = []
    for name in types:
        idx = np.flatnonzero(aircraft == name)
        parts.append(rng.choice(idx, share, replace=False))
    out["Combined"] = dataset.take(np.sort(np.concatenate(parts)))
    return out


def benchmark_table(configs: dict[str, RegressorConfig],
                    datasets: dict[str, Dataset],
                    split_spec: SplitSpec | None = None) -> list[EvalReport]:
    """Train/test metric table: one report per (model, dataset, split)."""
    split_spec = split_spec or SplitSpec(0.7, seed=0)
    reports = []
    for ds_id, ds in datasets.items():
        tr, te = split_indices(ds.m, split_spec, ds.flight_ids)
        for model_id, cfg in configs.items():
            model = fit_regressor(cfg, ds.X[tr], ds.y[tr])
            reports.append(evaluate_model(model, ds.X[tr], ds.y[tr],
                                          model_id, ds_id, "training"))
            reports.append(evaluate_model(model, ds.X[te], ds.y[te],
                                          model_id, ds_id, "testing"))
    return reports
