"""Fully connected feedforward regressor trained by mini-batch SGD.

ReLU hidden activations, a single linear output, squared-error loss.
Training uses momentum SGD with a fixed epoch budget, seed-deterministic
shuffling, and early stopping on an internal validation split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ContractError
from .elastic_net import NumericError

MAX_EPOCHS = 500
PATIENCE = 20
VAL_FRACTION = 0.1


@dataclass(frozen=True)
class MlpParams:
    weights: list  # list of (W, b) per layer, hidden layers then output
    n_hidden_layers: int

    def to_dict(self) -> dict:
        return {
            "n_hidden_layers": self.n_hidden_layers,
            "weights": [[W.tolist(), b.tolist()] for W, b in self.weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpParams":
        weights = [(np.array(W), np.array(b)) for W, b in d["weights"]]
        return cls(weights=weights, n_hidden_layers=int(d["n_hidden_layers"]))


def init_params(n_inputs: int, n_layers: int, n_neurons: int,
                rng: np.random.Generator) -> MlpParams:
    if n_layers not in (1, 2, 3):
        raise ContractError(f"hidden layer count must be 1, 2 or 3, got {n_layers}")
    if n_neurons < 1:
        raise ContractError("need at least one neuron per hidden layer")
    sizes = [n_inputs] + [n_neurons] * n_layers + [1]
    weights = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        W = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
        weights.append((W, np.zeros(fan_out)))
    return MlpParams(weights=weights, n_hidden_layers=n_layers)


def forward(params: MlpParams, X: np.ndarray):
    """Returns (prediction, per-layer activations for backprop)."""
    acts = [X]
    h = X
    for W, b in params.weights[:-1]:
        h = np.maximum(h @ W + b, 0.0)
        acts.append(h)
    W, b = params.weights[-1]
    out = (h @ W + b).reshape(-1)
    return out, acts


def predict(params: MlpParams, X) -> np.ndarray:
    out, _ = forward(params, np.asarray(X, dtype=np.float64))
    return out


def loss_and_grads(params: MlpParams, X: np.ndarray, y: np.ndarray):
    """Mean squared error and its gradients w.r.t. every weight and bias."""
    out, acts = forward(params, X)
    n = y.size
    err = out - y
    loss = float(err @ err) / n
    grads = [None] * len(params.weights)
    delta = (2.0 / n) * err.reshape(-1, 1)  # d loss / d output
    for li in range(len(params.weights) - 1, -1, -1):
        W, _ = params.weights[li]
        a_prev = acts[li]
        grads[li] = (a_prev.T @ delta, delta.sum(axis=0))
        if li > 0:
            delta = (delta @ W.T) * (acts[li] > 0.0)
    return loss, grads


def fit_mlp_core(X, y, n_layers: int, n_neurons: int, batch_size: int,
                 seed: int = 0, learning_rate: float = 0.01,
                 momentum: float = 0.9, max_epochs: int = MAX_EPOCHS,
                 ) -> MlpParams:
    """Train on standardized features/targets; returns the best-validation
    parameters. Raises NumericError if the loss becomes non-finite."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = y.size
    rng = np.random.default_rng(seed)
    params = init_params(X.shape[1], n_layers, n_neurons, rng)

    n_val = max(1, int(round(VAL_FRACTION * n))) if n >= 10 else 0
    perm = rng.permutation(n)
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    Xtr, ytr = X[tr_idx], y[tr_idx]
    Xval, yval = X[val_idx], y[val_idx]

    vel = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params.weights]
    best = [(W.copy(), b.copy()) for W, b in params.weights]
    best_val = np.inf
    stall = 0
    m = ytr.size
    for epoch in range(max_epochs):
        order = rng.permutation(m)
        for s in range(0, m, batch_size):
            bi = order[s:s + batch_size]
            loss, grads = loss_and_grads(params, Xtr[bi], ytr[bi])
            if not np.isfinite(loss):
                raise NumericError(f"training loss diverged at epoch {epoch}")
            new_weights = []
            for (W, b), (vW, vb), (gW, gb) in zip(params.weights, vel, grads):
                vW *= momentum
                vW -= learning_rate * gW
                vb *= momentum
                vb -= learning_rate * gb
                new_weights.append((W + vW, b + vb))
            params = MlpParams(new_weights, params.n_hidden_layers)

        if n_val:
            res = predict(params, Xval) - yval
            val = float(res @ res) / n_val
            if not np.isfinite(val):
                raise NumericError(f"validation loss diverged at epoch {epoch}")
            if val < best_val - 1e-12:
                best_val = val
                best = [(W.copy(), b.copy()) for W, b in params.weights]
                stall = 0
            else:
                stall += 1
                if stall >= PATIENCE:
                    break
    if n_val:
        params = MlpParams(best, params.n_hidden_layers)
    return params


def gradient_check(params: MlpParams, X, y, eps: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    _, grads = loss_and_grads(params, X, y)
    worst = 0.0
    for li, (W, b) in enumerate(params.weights):
        for arr, g in ((W, grads[li][0]), (b, grads[li][1])):
            flat = arr.reshape(-1)
            gflat = np.asarray(g).reshape(-1)
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + eps
                lp, _ = loss_and_grads(params, X, y)
                flat[k] = orig - eps
                lm, _ = loss_and_grads(params, X, y)
                flat[k] = orig
                fd = (lp - lm) / (2.0 * eps)
                denom = max(abs(fd), abs(gflat[k]), 1e-8)
                worst = max(worst, abs(fd - gflat[k]) / denom)
    return worst
