"""Stratified k-fold cross-validation with pooled out-of-fold predictions."""

from __future__ import annotations

import numpy as np

from .base import LearnerSpec, _as_array, fit


def stratified_folds(y: np.ndarray, k: int, seed: int, row_keys: np.ndarray | None = None) -> np.ndarray:
    """Fold id (0..k-1) per row.

    Within each class rows are shuffled (by ``seed``) and dealt round-robin, so
    each fold's class counts are within one of ``count / k``. When ``row_keys``
    (e.g. content hashes) are given, rows are ordered by ``(key, seed)`` instead,
    which makes the assignment independent of input row order.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValueError("k must be at least 2")
    folds = np.empty(len(y), dtype=np.int64)
    rng = np.random.default_rng(seed)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if len(idx) < k:
            raise ValueError(f"class {cls!r} has {len(idx)} rows, fewer than k={k}")
        if row_keys is None:
            idx = rng.permutation(idx)
        else:
            salted = _salt(np.asarray(row_keys, dtype=np.uint64)[idx], seed)
            idx = idx[np.lexsort((idx, salted))]
        # random starting fold keeps small classes from piling into fold 0
        offset = int(rng.integers(k)) if row_keys is None else int(seed) % k
        folds[idx] = (np.arange(len(idx)) + offset) % k
    return folds


def _salt(keys: np.ndarray, seed: int) -> np.ndarray:
    # splitmix64 finalizer over key ^ seed
    with np.errstate(over="ignore"):
        z = keys ^ np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        z = (z + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
        z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
        z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
        return z ^ (z >> np.uint64(31))


def cross_val_proba(
    spec: LearnerSpec,
    X,
    y: np.ndarray,
    k: int = 10,
    seed: int = 0,
    row_keys: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Out-of-fold class-1 probabilities and the fold assignment used."""
    arr, _ = _as_array(X)
    y = np.asarray(y, dtype=np.float64)
    folds = stratified_folds(y, k, seed, row_keys)
    proba = np.empty(len(y))
    for f in range(k):
        test = folds == f
        model = fit(spec, arr[~test], y[~test])
        proba[test] = model.predict_proba(arr[test])
    return proba, folds


def stratified_kfold_losses(
    spec: LearnerSpec,
    X,
    y: np.ndarray,
    k: int = 10,
    seed: int = 0,
    row_keys: np.ndarray | None = None,
) -> np.ndarray:
    """Pooled out-of-fold 0-1 losses aligned to the input rows."""
    proba, _ = cross_val_proba(spec, X, y, k, seed, row_keys)
    predicted = (proba >= 0.5).astype(np.float64)
    return (predicted != np.asarray(y, dtype=np.float64)).astype(np.int64)
