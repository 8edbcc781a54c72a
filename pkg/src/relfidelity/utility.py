"""Train-on-synthetic / evaluate-on-real utility scoring.

Each learner in a panel is fit once on real training data and once on
synthetic data; both fits are scored on the same held-out real test set. The
agreement between the two learner orderings (model selection) and between the
two gbt importance orderings (feature selection) is reported as rank
correlations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .aggregation import AggregatedTable, relational_aggregation
from .learners import FeatureMatrix, LearnerSpec, TableEncoder, feature_importance, fit
from .ranking import RANK_KINDS, rank_correlations
from .relational import ColumnMeta, Database, Table, TableMeta, subset_database

TASK_KINDS = ("classification", "regression")


@dataclass(frozen=True)
class UtilityTask:
    target_table: str
    target_column: str
    kind: str
    test: Database | None = None
    positive_value: Any = None
    exclude_columns: tuple[str, ...] = ()
    join_parents: bool = True
    name: str | None = None

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"task kind must be one of {TASK_KINDS}, got {self.kind!r}")

    @property
    def label(self) -> str:
        return self.name or f"{self.target_table}.{self.target_column}"


@dataclass
class UtilityResult:
    task: str
    kind: str
    metric: str
    scores: dict[str, dict[str, float | None]]
    baseline: float
    model_rank: dict[str, float | None]
    feature_rank: dict[str, float | None]
    failures: dict[str, str] = field(default_factory=dict)
    learners: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "kind": self.kind,
            "metric": self.metric,
            "scores": self.scores,
            "baseline": self.baseline,
            "model_rank": self.model_rank,
            "feature_rank": self.feature_rank,
            "failures": self.failures,
            "learners": self.learners,
        }


def default_panel(kind: str) -> list[LearnerSpec]:
    panel = [LearnerSpec("linear"), LearnerSpec("tree"), LearnerSpec("gbt"), LearnerSpec("knn")]
    if kind == "classification":
        panel.append(LearnerSpec("logistic"))
    return panel


def _with_parents(db: Database, table: AggregatedTable) -> AggregatedTable:
    """Left-join each parent's attributes onto the target rows (prefixed ``<parent>__``)."""
    data = table.data
    columns = list(table.meta.columns)
    provenance = dict(table.provenance)
    for rel in db.schema.parents(table.name):
        parent = db[rel.parent]
        attrs = parent.meta.attributes
        if not attrs:
            continue
        ns = rel.parent if len(db.schema.parents(table.name)) == 1 else f"{rel.parent}[{rel.column}]"
        lookup = parent.data.set_index(parent.meta.primary_key)[[a.name for a in attrs]]
        joined = lookup.reindex(data[rel.column].to_numpy())
        for a in attrs:
            name = f"{ns}__{a.name}"
            data = data.assign(**{name: joined[a.name].to_numpy()})
            columns.append(ColumnMeta(name, a.sem_type, a.datetime_format))
            provenance[name] = "original"
    meta = TableMeta(table.meta.name, table.meta.primary_key, tuple(columns), table.meta.foreign_keys)
    return AggregatedTable(Table(meta, data), provenance)


def _targets(values: pd.Series, meta: ColumnMeta, task: UtilityTask) -> np.ndarray:
    if task.kind == "regression":
        if meta.sem_type not in ("numerical", "datetime", "boolean"):
            raise ValueError(f"regression target {meta.name!r} is not numeric")
        return values.to_numpy(dtype=np.float64)
    if task.positive_value is not None:
        positive = task.positive_value
        if meta.sem_type == "boolean":
            positive = float(positive in (True, 1, "1", "true", "True"))
        elif meta.sem_type == "numerical":
            positive = float(positive)
        else:
            positive = str(positive)
        return np.where(values.isna(), np.nan, (values == positive).astype(np.float64))
    if meta.sem_type == "boolean":
        return values.to_numpy(dtype=np.float64)
    levels = sorted(values.dropna().astype(str).unique())
    if len(levels) != 2:
        raise ValueError(
            f"classification target {meta.name!r} has {len(levels)} levels; set positive_value to binarize it"
        )
    return np.where(values.isna(), np.nan, (values.astype(str) == levels[1]).astype(np.float64))


def _supervised_frame(db: Database, task: UtilityTask) -> tuple[AggregatedTable, np.ndarray]:
    table = db[task.target_table]
    if task.target_column not in table.meta.column_names:
        raise KeyError(f"missing target column {task.target_column!r} in table {task.target_table!r}")
    meta = table.meta.column(task.target_column)
    y = _targets(table.data[task.target_column], meta, task)
    if np.all(np.isnan(y)):
        raise ValueError(f"target column {task.target_column!r} is entirely null")
    agg = relational_aggregation(db, task.target_table)
    if task.join_parents:
        agg = _with_parents(db, agg)
    drop = {task.target_column, *task.exclude_columns}
    keep = [c.name for c in agg.meta.columns if c.name not in drop and c.sem_type != "id"]
    rows = np.flatnonzero(~np.isnan(y))
    features = AggregatedTable(agg.table.select(keep).take(rows), {c: agg.provenance[c] for c in keep})
    return features, y[rows]


def assemble_supervised(
    db: Database, task: UtilityTask, encoder: TableEncoder | None = None
) -> tuple[FeatureMatrix, np.ndarray, TableEncoder]:
    """Feature matrix and targets for the target table; rows with a null target are dropped.

    Features are the target table's own columns, aggregates of its children and
    (optionally) its parents' attributes. Pass a fitted ``encoder`` to encode
    test data exactly like the training data.
    """
    features, y = _supervised_frame(db, task)
    if encoder is None:
        encoder = TableEncoder().fit([features])
    return encoder.transform(features), y, encoder


def _score(kind: str, y_true: np.ndarray, y_pred: np.ndarray) -> float:
    if kind == "classification":
        return float(np.mean(y_pred == y_true))
    return float(math.sqrt(np.mean((y_pred - y_true) ** 2)))


def _goodness(kind: str, score: float) -> float:
    # rank by quality so +1 always means the same model ordering
    return score if kind == "classification" else -score


def _importance_vector(model, names: list[str]) -> np.ndarray:
    weights = dict((f, w) for f, w in feature_importance(model))
    return np.array([weights.get(n, 0.0) for n in names])


def _undefined() -> dict[str, float | None]:
    return {k: None for k in RANK_KINDS}


def tstr(
    real_train: Database,
    syn: Database,
    task: UtilityTask,
    learners: list[LearnerSpec] | None = None,
    seed: int = 0,
) -> UtilityResult:
    """Score each learner trained on real and on synthetic data against held-out real rows.

    Learner failures are recorded and skipped; they never abort the run.
    """
    if task.test is None:
        raise ValueError("utility task has no held-out test database")
    learners = learners or default_panel(task.kind)
    X_real, y_real, enc_real = assemble_supervised(real_train, task)
    X_syn, y_syn, enc_syn = assemble_supervised(syn, task)
    test_features, y_test = _supervised_frame(task.test, task)
    test_for = {"real": enc_real.transform(test_features), "synthetic": enc_syn.transform(test_features)}
    train_for = {"real": (X_real, y_real), "synthetic": (X_syn, y_syn)}

    if task.kind == "classification":
        majority = float(np.mean(y_real) >= 0.5)
        baseline = _score(task.kind, y_test, np.full(len(y_test), majority))
    else:
        baseline = _score(task.kind, y_test, np.full(len(y_test), float(np.mean(y_real))))

    scores: dict[str, dict[str, float | None]] = {}
    failures: dict[str, str] = {}
    gbt_models: dict[str, Any] = {}
    for spec in learners:
        spec = LearnerSpec(spec.kind, dict(spec.params), seed, spec.label)
        scores[spec.name] = {}
        for side in ("real", "synthetic"):
            X, y = train_for[side]
            try:
                model = fit(spec, X, y, task.kind)
                scores[spec.name][side] = _score(task.kind, y_test, model.predict(test_for[side]))
                if spec.kind == "gbt":
                    gbt_models.setdefault(side, model)
            except Exception as exc:
                scores[spec.name][side] = None
                failures[f"{spec.name}/{side}"] = f"{type(exc).__name__}: {exc}"

    complete = [n for n, s in scores.items() if s["real"] is not None and s["synthetic"] is not None]
    if len(complete) >= 2:
        a = [_goodness(task.kind, scores[n]["real"]) for n in complete]
        b = [_goodness(task.kind, scores[n]["synthetic"]) for n in complete]
        model_rank = rank_correlations(a, b)
    else:
        model_rank = _undefined()

    if "real" in gbt_models and "synthetic" in gbt_models:
        names = sorted(set(X_real.names) | set(X_syn.names))
        feature_rank = rank_correlations(
            _importance_vector(gbt_models["real"], names), _importance_vector(gbt_models["synthetic"], names)
        )
    else:
        feature_rank = _undefined()

    return UtilityResult(
        task=task.label,
        kind=task.kind,
        metric="accuracy" if task.kind == "classification" else "rmse",
        scores=scores,
        baseline=baseline,
        model_rank=model_rank,
        feature_rank=feature_rank,
        failures=failures,
        learners=[s.to_dict() for s in learners],
    )


def holdout_split(db: Database, table: str, test_fraction: float, seed: int = 0) -> tuple[Database, Database]:
    """Split ``table`` rows into train/test; descendant rows follow their ancestor.

    Tables that are not descendants of ``table`` appear unchanged in both parts.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    n = len(db[table])
    rng = np.random.default_rng(seed)
    n_test = max(1, min(n - 1, round(test_fraction * n)))
    in_test = np.zeros(n, dtype=bool)
    in_test[rng.choice(n, n_test, replace=False)] = True
    return subset_database(db, table, np.flatnonzero(~in_test)), subset_database(db, table, np.flatnonzero(in_test))


def load_task_config(path: str | Path) -> list[dict[str, Any]]:
    """Read a utility configuration: a JSON object with a ``tasks`` list.

    Each task gives ``target_table``, ``target_column``, ``kind`` and optionally
    ``positive_value``, ``exclude_columns``, ``join_parents``, ``name`` and
    ``test_fraction`` (default 0.2) with ``split_seed`` (default 0).
    """
    doc = json.loads(Path(path).read_text())
    tasks = doc.get("tasks") if isinstance(doc, dict) else None
    if not isinstance(tasks, list) or not tasks:
        raise ValueError("utility config needs a non-empty 'tasks' list")
    for t in tasks:
        for key in ("target_table", "target_column", "kind"):
            if key not in t:
                raise ValueError(f"utility task is missing {key!r}")
    return tasks


def task_from_config(entry: dict[str, Any], test: Database | None = None) -> UtilityTask:
    return UtilityTask(
        target_table=entry["target_table"],
        target_column=entry["target_column"],
        kind=entry["kind"],
        test=test,
        positive_value=entry.get("positive_value"),
        exclude_columns=tuple(entry.get("exclude_columns", ())),
        join_parents=entry.get("join_parents", True),
        name=entry.get("name"),
    )
