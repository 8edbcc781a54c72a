"""Regression trees grown by exact greedy search on presorted features, and
gradient boosting on top of them.

Trees are grown level by level: at each depth one pass over every presorted
feature column evaluates every candidate threshold of every open node, using
first/second order gradient statistics. Splits maximize

    gain = 1/2 * (GL^2 / (HL + lambda) + GR^2 / (HR + lambda) - G^2 / (H + lambda))

and leaves predict ``-G / (H + lambda)``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_NO_FEATURE = -1


@njit(cache=True)
def _grow(X, order, g, h, max_depth, min_samples_leaf, reg_lambda, min_split_gain):
    n, n_features = X.shape
    max_nodes = 2 ** (max_depth + 1) - 1
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    value = np.zeros(max_nodes)
    gain_at = np.zeros(max_nodes)

    node_of = np.zeros(n, dtype=np.int64)
    n_nodes = 1
    # nodes open at the current depth are [level_start, level_end)
    level_start = 0
    level_end = 1

    G = np.zeros(max_nodes)
    H = np.zeros(max_nodes)
    N = np.zeros(max_nodes, dtype=np.int64)
    for i in range(n):
        G[0] += g[i]
        H[0] += h[i]
        N[0] += 1

    for depth in range(max_depth):
        width = level_end - level_start
        if width == 0:
            break
        best_gain = np.full(width, -np.inf)
        best_feat = np.full(width, -1, dtype=np.int64)
        best_thr = np.zeros(width)
        GL = np.zeros(width)
        HL = np.zeros(width)
        NL = np.zeros(width, dtype=np.int64)
        last = np.zeros(width)
        for f in range(n_features):
            GL[:] = 0.0
            HL[:] = 0.0
            NL[:] = 0
            for t in range(n):
                i = order[t, f]
                k = node_of[i] - level_start
                if k < 0 or k >= width:
                    continue
                v = X[i, f]
                node = k + level_start
                if NL[k] > 0 and v > last[k]:
                    nl = NL[k]
                    nr = N[node] - nl
                    if nl >= min_samples_leaf and nr >= min_samples_leaf:
                        gl = GL[k]
                        hl = HL[k]
                        gr = G[node] - gl
                        hr = H[node] - hl
                        gain = 0.5 * (
                            gl * gl / (hl + reg_lambda)
                            + gr * gr / (hr + reg_lambda)
                            - G[node] * G[node] / (H[node] + reg_lambda)
                        )
                        if gain > best_gain[k]:
                            best_gain[k] = gain
                            best_feat[k] = f
                            best_thr[k] = 0.5 * (last[k] + v)
                            # midpoint can round onto v for adjacent floats
                            if best_thr[k] >= v:
                                best_thr[k] = last[k]
                GL[k] += g[i]
                HL[k] += h[i]
                NL[k] += 1
                last[k] = v

        next_start = n_nodes
        for k in range(width):
            node = level_start + k
            if best_feat[k] >= 0 and best_gain[k] >= min_split_gain:
                feature[node] = best_feat[k]
                threshold[node] = best_thr[k]
                gain_at[node] = best_gain[k]
                left[node] = n_nodes
                right[node] = n_nodes + 1
                n_nodes += 2
        for i in range(n):
            node = node_of[i]
            if node >= level_start and node < level_end and feature[node] >= 0:
                child = left[node] if X[i, feature[node]] <= threshold[node] else right[node]
                node_of[i] = child
                G[child] += g[i]
                H[child] += h[i]
                N[child] += 1
        level_start = next_start
        level_end = n_nodes

    for node in range(n_nodes):
        if feature[node] < 0:
            value[node] = -G[node] / (H[node] + reg_lambda)
    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        gain_at[:n_nodes].copy(),
    )


@njit(cache=True)
def _predict(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


class Tree:
    """One fitted regression tree in flat-array form."""

    __slots__ = ("feature", "threshold", "left", "right", "value", "gain")

    def __init__(self, feature, threshold, left, right, value, gain):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.gain = gain

    @classmethod
    def grow(cls, X, order, g, h, max_depth, min_samples_leaf, reg_lambda, min_split_gain=0.0) -> Tree:
        return cls(
            *_grow(
                X,
                order,
                np.ascontiguousarray(g, dtype=np.float64),
                np.ascontiguousarray(h, dtype=np.float64),
                int(max_depth),
                int(min_samples_leaf),
                float(reg_lambda),
                float(min_split_gain),
            )
        )

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _predict(X, self.feature, self.threshold, self.left, self.right, self.value)

    @property
    def n_splits(self) -> int:
        return int((self.feature >= 0).sum())


def presort(X: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable"), dtype=np.int64)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _logloss(y, z):
    # log(1 + exp(z)) - y z, computed stably
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


class GradientBoostedTrees:
    """Boosted regression trees on the logistic (classification) or squared (regression) loss."""

    def __init__(
        self,
        n_estimators: int = 100,
        max_depth: int = 6,
        learning_rate: float = 0.1,
        min_samples_leaf: int = 5,
        reg_lambda: float = 1.0,
        min_split_gain: float = 0.0,
        task: str = "classification",
    ):
        if n_estimators < 1 or max_depth < 1 or min_samples_leaf < 1:
            raise ValueError("n_estimators, max_depth and min_samples_leaf must be >= 1")
        if not 0 < learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if task not in ("classification", "regression"):
            raise ValueError(f"unknown task {task!r}")
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_samples_leaf = min_samples_leaf
        self.reg_lambda = reg_lambda
        self.min_split_gain = min_split_gain
        self.task = task

    def fit(self, X: np.ndarray, y: np.ndarray) -> GradientBoostedTrees:
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        order = presort(X)
        if self.task == "classification":
            p = float(np.clip(y.mean(), 1e-12, 1 - 1e-12))
            self.base_score_ = float(np.log(p / (1 - p)))
        else:
            self.base_score_ = float(y.mean())
        z = np.full(len(y), self.base_score_)
        self.trees_: list[Tree] = []
        self.train_loss_ = [self._loss(y, z)]
        for _ in range(self.n_estimators):
            if self.task == "classification":
                p = _sigmoid(z)
                g, h = p - y, p * (1.0 - p)
            else:
                g, h = z - y, np.ones_like(y)
            tree = Tree.grow(
                X, order, g, h, self.max_depth, self.min_samples_leaf, self.reg_lambda, self.min_split_gain
            )
            tree.value *= self.learning_rate
            self.trees_.append(tree)
            z = z + tree.predict(X)
            self.train_loss_.append(self._loss(y, z))
        self.n_features_ = X.shape[1]
        return self

    def _loss(self, y, z) -> float:
        if self.task == "classification":
            return _logloss(y, z)
        return float(np.mean((y - z) ** 2))

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        z = np.full(X.shape[0], self.base_score_)
        for tree in self.trees_:
            z += tree.predict(X)
        return z

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.task == "classification":
            return (self.predict_proba(X) >= 0.5).astype(np.float64)
        return self.decision_function(X)

    def gain_importance(self) -> np.ndarray:
        """Total split gain per feature."""
        total = np.zeros(self.n_features_)
        for tree in self.trees_:
            mask = tree.feature >= 0
            np.add.at(total, tree.feature[mask], tree.gain[mask])
        return total

    def used_features(self) -> np.ndarray:
        used = np.zeros(self.n_features_, dtype=bool)
        for tree in self.trees_:
            used[tree.feature[tree.feature >= 0]] = True
        return used


class DecisionTree:
    """Single CART-style regression tree (variance reduction, leaf means).

    For classification it is fit on the 0/1 labels, so leaves hold class-1 rates.
    """

    def __init__(self, max_depth: int = 6, min_samples_leaf: int = 5, task: str = "classification"):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.task = task

    def fit(self, X: np.ndarray, y: np.ndarray) -> DecisionTree:
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self.base_ = float(y.mean())
        # squared loss from the mean: g = base - y, h = 1, no shrinkage and no penalty
        self.tree_ = Tree.grow(
            X, presort(X), self.base_ - y, np.ones_like(y), self.max_depth, self.min_samples_leaf, 0.0, 0.0
        )
        self.n_features_ = X.shape[1]
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return self.base_ + self.tree_.predict(np.ascontiguousarray(X, dtype=np.float64))

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return np.clip(self.decision_function(X), 0.0, 1.0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.task == "classification":
            return (self.predict_proba(X) >= 0.5).astype(np.float64)
        return self.decision_function(X)

    def gain_importance(self) -> np.ndarray:
        total = np.zeros(self.n_features_)
        mask = self.tree_.feature >= 0
        np.add.at(total, self.tree_.feature[mask], self.tree_.gain[mask])
        return total

    def used_features(self) -> np.ndarray:
        used = np.zeros(self.n_features_, dtype=bool)
        used[self.tree_.feature[self.tree_.feature >= 0]] = True
        return used
