"""L2-regularized logistic regression and least-squares linear models."""

from __future__ import annotations

import numpy as np


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Mean log-loss plus ``l2 / (2n) * ||w||^2`` (intercept unpenalized)."""
    z = X @ w + b
    n = len(y)
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w) / n)


def logistic_gradient(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float) -> tuple[np.ndarray, float]:
    n = len(y)
    r = _sigmoid(X @ w + b) - y
    return X.T @ r / n + l2 * w / n, float(r.mean())


class LogisticRegression:
    """Full-batch accelerated gradient descent on :func:`logistic_objective`.

    The step size is ``1/L`` with ``L`` the Lipschitz constant of the gradient,
    so the iteration needs no line search. Stops when the gradient norm drops
    below ``tol`` or after ``max_iter`` iterations.
    """

    def __init__(self, l2: float = 1.0, tol: float = 1e-6, max_iter: int = 1000):
        if l2 < 0:
            raise ValueError("l2 must be non-negative")
        self.l2 = l2
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X: np.ndarray, y: np.ndarray) -> LogisticRegression:
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        # Lipschitz bound of the gradient of the mean loss w.r.t. (w, b)
        Xa = np.column_stack([X, np.ones(n)])
        spectral = np.linalg.norm(Xa, 2) ** 2 if d else float(n)
        lipschitz = 0.25 * spectral / n + self.l2 / n
        step = 1.0 / lipschitz
        w = np.zeros(d)
        b = 0.0
        w_prev, b_prev = w.copy(), b
        self.n_iter_ = 0
        for it in range(1, self.max_iter + 1):
            momentum = (it - 1) / (it + 2)
            vw = w + momentum * (w - w_prev)
            vb = b + momentum * (b - b_prev)
            gw, gb = logistic_gradient(vw, vb, X, y, self.l2)
            w_prev, b_prev = w, b
            w = vw - step * gw
            b = vb - step * gb
            self.n_iter_ = it
            if it % 10 == 0 or it == self.max_iter:
                gw, gb = logistic_gradient(w, b, X, y, self.l2)
                if np.sqrt(gw @ gw + gb * gb) < self.tol:
                    break
        self.coef_ = w
        self.intercept_ = b
        self.feature_sd_ = X.std(axis=0) if n else np.zeros(d)
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.float64)

    def coefficient_importance(self) -> np.ndarray:
        return np.abs(self.coef_) * self.feature_sd_


class LinearRegression:
    """Ordinary least squares with intercept (minimum-norm solution when rank deficient).

    With ``task="classification"`` this is a linear probability model: fit on
    0/1 labels, probabilities clipped to [0, 1].
    """

    def __init__(self, task: str = "regression"):
        self.task = task

    def fit(self, X: np.ndarray, y: np.ndarray) -> LinearRegression:
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        Xa = np.column_stack([X, np.ones(len(y))])
        beta, *_ = np.linalg.lstsq(Xa, y, rcond=None)
        self.coef_ = beta[:-1]
        self.intercept_ = float(beta[-1])
        self.feature_sd_ = X.std(axis=0) if len(y) else np.zeros(X.shape[1])
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return np.clip(self.decision_function(X), 0.0, 1.0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.task == "classification":
            return (self.predict_proba(X) >= 0.5).astype(np.float64)
        return self.decision_function(X)

    def coefficient_importance(self) -> np.ndarray:
        return np.abs(self.coef_) * self.feature_sd_
