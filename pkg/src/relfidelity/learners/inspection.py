"""Feature importances and partial dependence for fitted learners."""

from __future__ import annotations

import numpy as np

from .base import FitModel, _as_array


def feature_importance(model: FitModel) -> list[tuple[str, float]]:
    """Normalized importances, descending, ties broken by feature name.

    * logistic/linear: |coefficient| times the feature's training sd
    * gbt/tree: total split gain; features never split on are omitted
    """
    est = model.estimator
    names = model.feature_names
    if model.kind in ("logistic", "linear"):
        raw = est.coefficient_importance()
        keep = np.ones(len(names), dtype=bool)
    elif model.kind in ("gbt", "tree"):
        raw = est.gain_importance()
        keep = est.used_features()
    else:
        raise ValueError(f"learner kind {model.kind!r} has no feature importances")
    raw = np.where(keep, np.maximum(raw, 0.0), 0.0)
    total = raw.sum()
    weights = raw / total if total > 0 else raw
    pairs = [(names[j], float(weights[j])) for j in range(len(names)) if keep[j]]
    return sorted(pairs, key=lambda p: (-p[1], p[0]))


def partial_dependence(model: FitModel, X, feature: str, grid) -> list[tuple[float, float]]:
    """Average prediction over ``X`` with ``feature`` overwritten by each grid value."""
    arr, names = _as_array(X)
    if feature not in names:
        raise KeyError(f"unknown feature {feature!r}")
    j = names.index(feature)
    out = []
    work = arr.copy()
    for g in grid:
        work[:, j] = g
        out.append((float(g), float(np.mean(model.predict_proba(work)))))
    return out
