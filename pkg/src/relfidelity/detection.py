"""Classifier two-sample tests: discriminative detection with and without child
aggregates, legacy logistic and parent-child detection, and the copying check.

A detector is cross-validated on real rows (label 1) stacked over synthetic rows
(label 0). The pooled out-of-fold 0-1 losses give an accuracy that is tested
against the majority-class baseline with an exact one-sided binomial test.
Accuracy significantly *above* the baseline means the data are separable;
significantly *below* it suggests the synthetic rows copy the real ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd
from scipy.special import logsumexp
from scipy.stats import binom, rankdata

from .aggregation import AGGREGATE, ORIGINAL, AggregatedTable, relational_aggregation
from .learners import LearnerSpec, cross_val_proba, feature_importance, fit, preprocess
from .relational import Database, Relationship, SchemaError, Table, denormalize

ROW_CAP = 50_000
DEFAULT_FOLDS = 10
LEGACY_CAVEAT = "legacy; i.i.d. violated"
SUSPECTED_COPYING = "suspected_copying"
NO_COPYING = "none"


@dataclass
class DetectionResult:
    method: str
    table: str
    learner: LearnerSpec
    losses: np.ndarray
    n_real: int
    n_syn: int
    folds: int
    p_value: float
    p_value_lower: float
    auc: float
    alpha: float = 0.05
    columns: list[str] = field(default_factory=list)
    importances: list[tuple[str, float, str]] | None = None
    caveat: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return 1.0 - float(np.mean(self.losses))

    @property
    def baseline(self) -> float:
        return max(self.n_real, self.n_syn) / (self.n_real + self.n_syn)

    @property
    def legacy_ld_score(self) -> float:
        return 2.0 * max(self.auc, 0.5) - 1.0

    @property
    def separable(self) -> bool:
        return bool(self.p_value < self.alpha)

    @property
    def copying_flag(self) -> str:
        return data_copying_diagnostic(self, self.alpha)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "table": self.table,
            "columns": list(self.columns),
            "learner": self.learner.to_dict(),
            "folds": self.folds,
            "n_real": self.n_real,
            "n_syn": self.n_syn,
            "accuracy": self.accuracy,
            "baseline": self.baseline,
            "p_value": self.p_value,
            "p_value_lower": self.p_value_lower,
            "auc": self.auc,
            "legacy_ld_score": self.legacy_ld_score,
            "copying_flag": self.copying_flag,
            "separable": self.separable,
            "alpha": self.alpha,
            "importances": None
            if self.importances is None
            else [{"feature": f, "weight": w, "provenance": p} for f, w, p in self.importances],
            "caveat": self.caveat,
            "notes": list(self.notes),
        }


def binomial_detection_test(losses, p0: float) -> tuple[float, float]:
    """Exact one-sided binomial tails for the number of correct predictions.

    Returns ``(P[Bin(N, p0) >= s], P[Bin(N, p0) <= s])`` with ``s`` the count of
    zero losses, each summed in log space.
    """
    losses = np.asarray(losses)
    n = len(losses)
    if n == 0:
        raise ValueError("no losses to test")
    if not 0.5 <= p0 < 1.0:
        raise ValueError(f"baseline p0 must lie in [0.5, 1), got {p0}")
    s = n - int(np.sum(losses))
    logpmf = binom.logpmf(np.arange(n + 1), n, p0)
    upper = math.exp(logsumexp(logpmf[s:]))
    lower = math.exp(logsumexp(logpmf[: s + 1]))
    return min(1.0, upper), min(1.0, lower)


def rank_auc(proba: np.ndarray, y: np.ndarray) -> float:
    """Area under the ROC curve from the Mann-Whitney rank sum, ties averaged."""
    y = np.asarray(y)
    n_pos = int(np.sum(y == 1))
    n_neg = len(y) - n_pos
    ranks = rankdata(proba, method="average")
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def data_copying_diagnostic(result: DetectionResult, alpha: float | None = None) -> str:
    """``suspected_copying`` when accuracy is significantly below the baseline."""
    alpha = result.alpha if alpha is None else alpha
    return SUSPECTED_COPYING if result.p_value_lower < alpha else NO_COPYING


def _row_keys(frame: pd.DataFrame, y: np.ndarray) -> np.ndarray:
    keyed = frame.assign(_label=y)
    return pd.util.hash_pandas_object(keyed, index=False).to_numpy(dtype=np.uint64)


def _subsample(n: int, m: int, cap: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    # keep the real:synthetic ratio, at least one row per side
    keep_n = min(n, max(1, round(cap * n / (n + m))))
    keep_m = min(m, max(1, cap - keep_n))
    rng = np.random.default_rng([seed, 0x5AB])
    return np.sort(rng.choice(n, keep_n, replace=False)), np.sort(rng.choice(m, keep_m, replace=False))


def _take(table, rows):
    if isinstance(table, AggregatedTable):
        return AggregatedTable(table.table.take(rows), dict(table.provenance))
    return table.take(rows)


def detect(
    real: Table | AggregatedTable,
    syn: Table | AggregatedTable,
    learner: LearnerSpec | None = None,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    alpha: float = 0.05,
    row_cap: int | None = ROW_CAP,
    importances: bool = True,
    permutation_invariant: bool = False,
    method: str = "dd",
) -> DetectionResult:
    """Run one detector on two already column-aligned tables.

    With ``permutation_invariant`` the fold assignment is keyed on row content
    hashes, so reordering either table leaves the result unchanged.
    """
    learner = learner or LearnerSpec("gbt")
    n, m = len(real), len(syn)
    if n == 0 or m == 0:
        raise ValueError("detection needs rows on both sides")
    notes: list[str] = []
    if row_cap is not None and n + m > row_cap:
        ri, si = _subsample(n, m, row_cap, seed)
        real, syn = _take(real, ri), _take(syn, si)
        notes.append(f"row cap {row_cap} applied: {n}+{m} rows subsampled to {len(ri)}+{len(si)}")
        n, m = len(ri), len(si)

    X, y = preprocess(real, syn)
    if X.shape[1] == 0:
        raise ValueError("no feature columns to detect on")
    if X.capped:
        notes.append(f"categories capped at 20 for {', '.join(X.capped)}")
    folds = min(k, n, m)
    if folds < 2:
        raise ValueError("detection needs at least two rows on each side")
    if folds < k:
        notes.append(f"folds reduced from {k} to {folds} (smallest side has {min(n, m)} rows)")

    keys = None
    if permutation_invariant:
        frame = pd.concat([real.data, syn.data], ignore_index=True)
        keys = _row_keys(frame.drop(columns=[c.name for c in real.meta.columns if c.sem_type == "id"]), y)
    spec = LearnerSpec(learner.kind, dict(learner.params), seed, learner.label)
    proba, _ = cross_val_proba(spec, X, y, folds, seed, keys)
    losses = ((proba >= 0.5).astype(np.float64) != y).astype(np.int64)
    p0 = max(n, m) / (n + m)
    p_upper, p_lower = binomial_detection_test(losses, p0)

    ranked = None
    if importances and learner.kind != "knn":
        model = fit(spec, X, y)
        prov = dict(zip(X.names, X.provenance))
        ranked = [(name, weight, prov[name]) for name, weight in feature_importance(model)]

    columns = [c.name for c in real.meta.columns if c.sem_type != "id"]
    return DetectionResult(
        method=method,
        table=real.name,
        learner=spec,
        losses=losses,
        n_real=n,
        n_syn=m,
        folds=folds,
        p_value=p_upper,
        p_value_lower=p_lower,
        auc=rank_auc(proba, y),
        alpha=alpha,
        columns=columns,
        importances=ranked,
        notes=notes,
    )


def _feature_columns(db: Database, table: str, columns) -> list[str]:
    available = [c.name for c in db[table].meta.attributes]
    if columns is None:
        return available
    columns = list(columns)
    if not columns:
        raise ValueError("empty column selection")
    unknown = [c for c in columns if c not in available]
    if unknown:
        raise ValueError(f"column(s) {unknown} are not non-key columns of {table!r}")
    return columns


def discriminative_detection(
    db_real: Database,
    db_syn: Database,
    table: str,
    columns=None,
    learner: LearnerSpec | None = None,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    **options,
) -> DetectionResult:
    """Detection on the selected non-key columns of one table (all of them by default)."""
    cols = _feature_columns(db_real, table, columns)
    _feature_columns(db_syn, table, cols)
    return detect(db_real[table].select(cols), db_syn[table].select(cols), learner, k, seed, **options)


def discriminative_detection_with_aggregation(
    db_real: Database,
    db_syn: Database,
    table: str,
    learner: LearnerSpec | None = None,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    **options,
) -> DetectionResult:
    """Detection on the table augmented with aggregates of its child tables.

    Importances carry an ``original``/``aggregate`` provenance flag per feature.
    """
    if not db_real.schema.children(table):
        raise SchemaError(f"table {table!r} has no child tables to aggregate")
    real = relational_aggregation(db_real, table)
    syn = relational_aggregation(db_syn, table)
    options.setdefault("method", "dda")
    return detect(real, syn, learner, k, seed, **options)


def logistic_detection(
    db_real: Database,
    db_syn: Database,
    table: str,
    columns=None,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    **options,
) -> DetectionResult:
    options.setdefault("method", "ld")
    return discriminative_detection(db_real, db_syn, table, columns, LearnerSpec("logistic"), k, seed, **options)


def parent_child_detection(
    db_real: Database,
    db_syn: Database,
    relationship,
    learner: LearnerSpec | None = None,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    **options,
) -> DetectionResult:
    """Detection on denormalized child-with-parent rows.

    Rows sharing a parent are not independent, so the binomial test is
    anti-conservative here; the result always carries that caveat.
    """
    if isinstance(relationship, Relationship):
        parent, child = relationship.parent, relationship.child
    else:
        parent, child = relationship[0], relationship[1]
    real = denormalize(db_real, parent, child)
    syn = denormalize(db_syn, parent, child)
    options.setdefault("method", "parent_child")
    result = detect(real, syn, learner, k, seed, **options)
    result.caveat = LEGACY_CAVEAT
    return result


__all__ = [
    "AGGREGATE",
    "LEGACY_CAVEAT",
    "NO_COPYING",
    "ORIGINAL",
    "SUSPECTED_COPYING",
    "DetectionResult",
    "binomial_detection_test",
    "data_copying_diagnostic",
    "detect",
    "discriminative_detection",
    "discriminative_detection_with_aggregation",
    "logistic_detection",
    "parent_child_detection",
    "rank_auc",
]
