"""Elastic net linear regression via cyclic coordinate descent.

Minimizes ||y - b0 - X theta||_2^2 + alpha*beta*||theta||_1
          + alpha*(1-beta)/2 * ||theta||_2^2
with soft-thresholding updates. Expects standardized (zero-mean) feature
columns so the intercept decouples as mean(y).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ContractError


class NumericError(RuntimeError):
    """Raised when an iterative fit fails numerically."""


@dataclass(frozen=True)
class LinearModel:
    coef: np.ndarray
    intercept: float
    n_sweeps: int
    objective: float

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef + self.intercept

    def to_dict(self) -> dict:
        return {"coef": self.coef.tolist(), "intercept": self.intercept,
                "n_sweeps": self.n_sweeps, "objective": self.objective}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(np.array(d["coef"]), float(d["intercept"]),
                   int(d["n_sweeps"]), float(d["objective"]))


def _objective(r, theta, alpha, beta) -> float:
    return (float(r @ r)
            + alpha * beta * float(np.sum(np.abs(theta)))
            + 0.5 * alpha * (1.0 - beta) * float(theta @ theta))


def fit_elastic_net(X, y, alpha: float, beta: float,
                    tol: float = 1e-6, max_sweeps: int = 10_000) -> LinearModel:
    """Cyclic coordinate descent until the relative objective decrease per
    sweep drops below ``tol`` or ``max_sweeps`` is reached."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ContractError("non-finite input to elastic net fit")
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ContractError("X and y shapes are inconsistent")
    if alpha < 0:
        raise ContractError("alpha must be non-negative")
    if not (0.0 <= beta <= 1.0):
        raise ContractError("beta must lie in [0, 1]")

    n, p = X.shape
    intercept = float(np.mean(y))
    theta = np.zeros(p)
    r = y - intercept  # residual y - b0 - X@theta
    col_sq = np.einsum("ij,ij->j", X, X)
    l1 = alpha * beta
    l2 = alpha * (1.0 - beta)

    obj = _objective(r, theta, alpha, beta)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = theta[j]
            rho = 2.0 * float(X[:, j] @ r) + 2.0 * col_sq[j] * old
            new = _soft_threshold(rho, l1) / (2.0 * col_sq[j] + l2)
            if new != old:
                r += X[:, j] * (old - new)
                theta[j] = new
        new_obj = _objective(r, theta, alpha, beta)
        if not np.isfinite(new_obj):
            raise NumericError(f"objective diverged at sweep {sweeps}")
        if obj - new_obj <= tol * max(new_obj, 1e-12):
            obj = new_obj
            break
        obj = new_obj
    return LinearModel(coef=theta, intercept=intercept,
                       n_sweeps=sweeps, objective=obj)


def _soft_threshold(z: float, g: float) -> float:
    if z > g:
        return z - g
    if z < -g:
        return z + g
    return 0.0


def ols_fit(X, y) -> LinearModel:
    """Ordinary least squares with intercept, via lstsq normal route.

    Used as the stacking meta-model and as the independent oracle the
    coordinate-descent solver is checked against.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    A = np.column_stack([X, np.ones(X.shape[0])])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    return LinearModel(coef=sol[:-1], intercept=float(sol[-1]),
                       n_sweeps=0, objective=float(np.sum((y - A @ sol) ** 2)))
