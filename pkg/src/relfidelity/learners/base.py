"""Learner specifications and the uniform fit/predict wrapper around them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .knn import KNeighbors
from .linear import LinearRegression, LogisticRegression
from .preprocessing import FeatureMatrix
from .trees import DecisionTree, GradientBoostedTrees

KINDS = ("logistic", "gbt", "linear", "tree", "knn")

DEFAULTS: dict[str, dict[str, Any]] = {
    "logistic": {"l2": 1.0, "tol": 1e-6, "max_iter": 1000},
    "gbt": {
        "n_estimators": 100,
        "max_depth": 6,
        "learning_rate": 0.1,
        "min_samples_leaf": 5,
        "reg_lambda": 1.0,
        "min_split_gain": 0.0,
    },
    "linear": {},
    "tree": {"max_depth": 6, "min_samples_leaf": 5},
    "knn": {"k": 5},
}


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    label: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown {self.kind} hyperparameter(s) {sorted(unknown)}")

    @property
    def name(self) -> str:
        return self.label or self.kind

    @property
    def hyperparameters(self) -> dict[str, Any]:
        return {**DEFAULTS[self.kind], **self.params}

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "name": self.name, "seed": self.seed, "hyperparameters": self.hyperparameters}


def _as_array(X) -> tuple[np.ndarray, list[str]]:
    if isinstance(X, FeatureMatrix):
        return X.values, list(X.names)
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr, [f"x{j}" for j in range(arr.shape[1])]


class FitModel:
    """A fitted learner. Immutable after construction by :func:`fit`."""

    def __init__(self, spec: LearnerSpec, task: str, estimator, feature_names: list[str]):
        self.spec = spec
        self.task = task
        self.estimator = estimator
        self.feature_names = feature_names

    @property
    def kind(self) -> str:
        return self.spec.kind

    def predict_proba(self, X) -> np.ndarray:
        """Probability of class 1 (classification) or the prediction (regression)."""
        arr, _ = _as_array(X)
        if self.task == "regression":
            return self.estimator.predict(arr)
        return self.estimator.predict_proba(arr)

    def predict(self, X) -> np.ndarray:
        arr, _ = _as_array(X)
        return self.estimator.predict(arr)


def _build(spec: LearnerSpec, task: str):
    hp = spec.hyperparameters
    if spec.kind == "logistic":
        if task != "classification":
            raise ValueError("logistic learner only supports classification")
        return LogisticRegression(**hp)
    if spec.kind == "gbt":
        return GradientBoostedTrees(task=task, **hp)
    if spec.kind == "linear":
        return LinearRegression(task=task)
    if spec.kind == "tree":
        return DecisionTree(task=task, **hp)
    return KNeighbors(task=task, **hp)


def fit(spec: LearnerSpec, X, y, task: str = "classification") -> FitModel:
    """Fit a learner. Classification labels must be 0/1 with both classes present."""
    if task not in ("classification", "regression"):
        raise ValueError(f"unknown task {task!r}")
    arr, names = _as_array(X)
    y = np.asarray(y, dtype=np.float64)
    if len(y) != arr.shape[0]:
        raise ValueError("labels and features differ in length")
    if len(y) < 2:
        raise ValueError("need at least 2 rows to fit")
    if task == "classification":
        classes = np.unique(y)
        if not set(classes) <= {0.0, 1.0}:
            raise ValueError("classification labels must be 0/1")
        if len(classes) < 2:
            raise ValueError("classification input has a single class")
    estimator = _build(spec, task).fit(arr, y)
    return FitModel(spec, task, estimator, names)
