"""Regression forest over lag windows: variance-reduction trees on bootstrap
samples, random feature subsets of size ceil(features/3) per split."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..core import ContractError, TimeSeries, make_rng


@dataclass
class TreeNodes:
    """Flat array-of-nodes tree. Leaves have feature == -1."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, rows: np.ndarray) -> np.ndarray:
        out = np.empty(rows.shape[0])
        for i, row in enumerate(rows):
            node = 0
            while self.feature[node] >= 0:
                if row[self.feature[node]] <= self.threshold[node]:
                    node = self.left[node]
                else:
                    node = self.right[node]
            out[i] = self.value[node]
        return out


def best_split_for_feature(values: np.ndarray, targets: np.ndarray):
    """Exhaustive best threshold by weighted-variance reduction for one
    feature. Returns (threshold, score) or None when the feature is constant.
    Candidate thresholds are midpoints between consecutive distinct values."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    t = targets[order]
    n = v.size
    boundaries = np.flatnonzero(v[1:] > v[:-1]) + 1  # split sizes
    if boundaries.size == 0:
        return None
    csum = np.cumsum(t)
    csq = np.cumsum(t * t)
    total_sum, total_sq = csum[-1], csq[-1]
    k = boundaries
    left_sum = csum[k - 1]
    left_sse = csq[k - 1] - left_sum * left_sum / k
    right_n = n - k
    right_sum = total_sum - left_sum
    right_sse = (total_sq - csq[k - 1]) - right_sum * right_sum / right_n
    parent_sse = total_sq - total_sum * total_sum / n
    reduction = parent_sse - (left_sse + right_sse)
    best = int(np.argmax(reduction))
    threshold = 0.5 * (v[k[best] - 1] + v[k[best]])
    return float(threshold), float(reduction[best])


def _grow(rows, targets, depth, max_depth, feat_rng, nodes):
    idx = len(nodes["feature"])
    for key in nodes:
        nodes[key].append(0)
    if depth >= max_depth or rows.shape[0] < 2 or np.ptp(targets) == 0.0:
        nodes["feature"][idx] = -1
        nodes["value"][idx] = float(np.mean(targets))
        return idx
    n_features = rows.shape[1]
    n_try = -(-n_features // 3)  # ceil
    candidates = feat_rng.choice(n_features, size=n_try, replace=False)
    best = None
    for f in candidates:
        found = best_split_for_feature(rows[:, f], targets)
        if found is None:
            continue
        threshold, score = found
        if best is None or score > best[2]:
            best = (int(f), threshold, score)
    if best is None:
        nodes["feature"][idx] = -1
        nodes["value"][idx] = float(np.mean(targets))
        return idx
    f, threshold, _ = best
    mask = rows[:, f] <= threshold
    nodes["feature"][idx] = f
    nodes["threshold"][idx] = threshold
    nodes["value"][idx] = float(np.mean(targets))
    nodes["left"][idx] = _grow(rows[mask], targets[mask], depth + 1, max_depth, feat_rng, nodes)
    nodes["right"][idx] = _grow(rows[~mask], targets[~mask], depth + 1, max_depth, feat_rng, nodes)
    return idx


def fit_regression_tree(rows, targets, max_depth: int, rng) -> TreeNodes:
    if max_depth < 1:
        raise ContractError("max_depth must be >= 1")
    rows = np.asarray(rows, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if rows.shape[0] == 0:
        raise ContractError("empty training set")
    nodes = {"feature": [], "threshold": [], "left": [], "right": [], "value": []}
    _grow(rows, targets, 0, max_depth, rng, nodes)
    return TreeNodes(
        feature=np.array(nodes["feature"], dtype=np.int64),
        threshold=np.array(nodes["threshold"], dtype=np.float64),
        left=np.array(nodes["left"], dtype=np.int64),
        right=np.array(nodes["right"], dtype=np.int64),
        value=np.array(nodes["value"], dtype=np.float64),
    )


class RandomForestForecaster:
    """Forest over (lag window -> next value) pairs; prediction is the mean
    of per-tree predictions."""

    def __init__(self, n_trees: int = 500, max_depth: int = 10, lag_window: int = 10, seed: int = 0):
        if n_trees < 1:
            raise ContractError("n_trees must be >= 1")
        if max_depth < 1:
            raise ContractError("max_depth must be >= 1")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.lag_window = lag_window
        self.seed = seed
        self.trees: List[TreeNodes] = []

    @property
    def min_context(self) -> int:
        return self.lag_window

    def fit(self, train: TimeSeries) -> "RandomForestForecaster":
        values = train.values
        w = self.lag_window
        if len(values) <= w + 1:
            raise ContractError(f"random forest needs > lag_window+1 = {w + 1} points")
        n_rows = len(values) - w
        rows = np.empty((n_rows, w))
        for j in range(w):
            rows[:, j] = values[j : j + n_rows]
        targets = values[w:]
        rng = make_rng(self.seed)
        self.trees = []
        for _ in range(self.n_trees):
            boot = rng.integers(0, n_rows, size=n_rows)
            self.trees.append(fit_regression_tree(rows[boot], targets[boot], self.max_depth, rng))
        return self

    def predict_one_step(self, context) -> float:
        context = np.asarray(context, dtype=np.float64)
        if context.size < self.lag_window:
            raise ContractError(f"context must hold >= {self.lag_window} values")
        row = context[-self.lag_window :][None, :]
        return float(np.mean([tree.predict(row)[0] for tree in self.trees]))
