"""CART-style regression trees: greedy variance-reduction splitting.

The growth loop is numba-compiled; the ensemble studies fit hundreds of
thousands of trees, which rules out a pure-Python node loop. Split candidates
are midpoints of consecutive distinct sorted feature values; ties on gain are
broken by lowest feature index, then lowest threshold, so fits are fully
deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..core import ContractError

_LEAF = -1


@njit(cache=True)
def _grow(X, y, max_depth, min_leaf, allowed, n_sub, seed):
    """Grow a tree; returns (feature, threshold, left, right, value, count).

    Columns are argsorted once up front; node splits stably partition each
    feature's sorted index list, so per-node split scans need no sorting.
    """
    np.random.seed(seed)
    n, p = X.shape
    cap = 2 * n + 1
    if max_depth < 30:
        cap = min(cap, 2 ** (max_depth + 1) + 1)
    feature = np.full(cap, _LEAF, dtype=np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, _LEAF, dtype=np.int32)
    right = np.full(cap, _LEAF, dtype=np.int32)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)

    order = np.empty((p, n), dtype=np.int32)
    for f in allowed:
        order[f] = np.argsort(X[:, f]).astype(np.int32)
    tmp = np.empty(n, dtype=np.int32)
    is_left = np.empty(n, dtype=np.uint8)
    pool = allowed.copy()
    # stack rows: node id, start, end, depth
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0] = (0, 0, n, 0)
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node, start, end, depth = stack[top]
        m = end - start
        f0 = allowed[0]
        s1 = 0.0
        s2 = 0.0
        for i in range(start, end):
            w = y[order[f0, i]]
            s1 += w
            s2 += w * w
        value[node] = s1 / m
        count[node] = m
        if depth >= max_depth or m < 2 * min_leaf:
            continue
        parent_sse = s2 - s1 * s1 / m
        if parent_sse <= 0.0:
            continue

        # draw the per-split feature subset (partial Fisher-Yates), then scan
        # it in ascending index order for deterministic tie-breaking
        k = n_sub
        for i in range(k):
            j = i + np.random.randint(0, pool.size - i)
            pool[i], pool[j] = pool[j], pool[i]
        chosen = np.sort(pool[:k])

        best_gain = 0.0
        best_feat = -1
        best_thr = 0.0
        for fi in range(k):
            f = chosen[fi]
            c1 = 0.0
            c2 = 0.0
            row = order[f, start]
            v_cur = X[row, f]
            w = y[row]
            for i in range(m - 1):
                c1 += w
                c2 += w * w
                row = order[f, start + i + 1]
                v_next = X[row, f]
                w = y[row]
                nl = i + 1
                nr = m - nl
                if nl < min_leaf or nr < min_leaf or v_next <= v_cur:
                    v_cur = v_next
                    continue
                sse_l = c2 - c1 * c1 / nl
                r1 = s1 - c1
                sse_r = (s2 - c2) - r1 * r1 / nr
                gain = parent_sse - sse_l - sse_r
                if gain > best_gain:
                    thr = 0.5 * (v_cur + v_next)
                    if thr >= v_next:  # midpoint rounded up to the right value
                        thr = v_cur
                    best_gain = gain
                    best_feat = f
                    best_thr = thr
                v_cur = v_next
        if best_feat < 0:
            continue

        # stable partition of every feature's sorted segment
        nl = 0
        for i in range(start, end):
            row = order[best_feat, i]
            flag = X[row, best_feat] <= best_thr
            is_left[row] = flag
            if flag:
                nl += 1
        for f in allowed:
            a = 0
            b = nl
            for i in range(start, end):
                row = order[f, i]
                if is_left[row]:
                    tmp[a] = row
                    a += 1
                else:
                    tmp[b] = row
                    b += 1
            for i in range(m):
                order[f, start + i] = tmp[i]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = lid
        right[node] = rid
        stack[top] = (lid, start, start + nl, depth + 1)
        stack[top + 1] = (rid, start + nl, end, depth + 1)
        top += 2
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], value[:n_nodes], count[:n_nodes])


@njit(cache=True)
def _predict(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feature[node] != _LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@dataclass(frozen=True)
class RegressionTree:
    """A fitted binary regression tree in flat-array form."""

    feature: np.ndarray    # split feature per node, -1 for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # mean target of the node's training samples
    count: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _predict(self.feature, self.threshold, self.left, self.right,
                        self.value, X)

    def depth(self) -> int:
        depths = {0: 0}
        best = 0
        for node in range(self.n_nodes):
            d = depths[node]
            best = max(best, d)
            if self.feature[node] != _LEAF:
                depths[int(self.left[node])] = d + 1
                depths[int(self.right[node])] = d + 1
        return best

    def leaf_counts(self) -> np.ndarray:
        leaves = self.feature == _LEAF
        return self.count[leaves]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "count": self.count.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        return cls(
            feature=np.array(d["feature"], dtype=np.int32),
            threshold=np.array(d["threshold"], dtype=np.float64),
            left=np.array(d["left"], dtype=np.int32),
            right=np.array(d["right"], dtype=np.int32),
            value=np.array(d["value"], dtype=np.float64),
            count=np.array(d["count"], dtype=np.int64),
        )


def fit_tree(X, y, max_depth: int, min_leaf: int = 1,
             feature_subset_ratio: float = 1.0, seed: int = 0,
             allowed_features=None) -> RegressionTree:
    """Fit one regression tree.

    ``feature_subset_ratio`` controls the random per-split feature subset;
    ``allowed_features`` restricts the candidate columns for the whole tree
    (used for per-tree column subsampling in boosting). Fewer than
    2*min_leaf samples yields a root-only tree.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ContractError("X must be 2-d with one target per row")
    if X.shape[0] == 0:
        raise ContractError("cannot fit a tree on an empty dataset")
    if max_depth < 0 or min_leaf < 1:
        raise ContractError("max_depth must be >= 0 and min_leaf >= 1")
    if not (0.0 < feature_subset_ratio <= 1.0):
        raise ContractError("feature_subset_ratio must lie in (0, 1]")
    if allowed_features is None:
        allowed = np.arange(X.shape[1], dtype=np.int64)
    else:
        allowed = np.asarray(sorted(allowed_features), dtype=np.int64)
        if allowed.size == 0:
            raise ContractError("allowed_features must not be empty")
    n_sub = max(1, int(np.ceil(feature_subset_ratio * allowed.size)))
    arrays = _grow(X, y, max_depth, min_leaf, allowed, n_sub,
                   seed & 0x7FFFFFFF)
    return RegressionTree(*arrays)
