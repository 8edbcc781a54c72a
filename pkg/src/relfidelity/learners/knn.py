from __future__ import annotations

import numpy as np


class KNeighbors:
    """Brute-force k-nearest neighbours on Euclidean distance.

    Distance ties are broken by training-row order so predictions are deterministic.
    """

    def __init__(self, k: int = 5, task: str = "classification", chunk: int = 512):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.task = task
        self.chunk = chunk

    def fit(self, X: np.ndarray, y: np.ndarray) -> KNeighbors:
        self.X_ = np.asarray(X, dtype=np.float64)
        self.y_ = np.asarray(y, dtype=np.float64)
        self.sq_ = np.einsum("ij,ij->i", self.X_, self.X_)
        return self

    def _neighbour_mean(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        k = min(self.k, len(self.y_))
        out = np.empty(len(X))
        for start in range(0, len(X), self.chunk):
            block = X[start : start + self.chunk]
            d2 = self.sq_[None, :] - 2.0 * block @ self.X_.T + np.einsum("ij,ij->i", block, block)[:, None]
            nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
            out[start : start + len(block)] = self.y_[nearest].mean(axis=1)
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self._neighbour_mean(X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        m = self._neighbour_mean(X)
        if self.task == "classification":
            return (m >= 0.5).astype(np.float64)
        return m
