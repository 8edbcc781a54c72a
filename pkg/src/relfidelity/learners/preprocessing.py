"""Encoding of typed tables into dense, finite feature matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..aggregation import ORIGINAL, AggregatedTable
from ..relational import NUMERIC_TYPES, ColumnMeta, Table

MISSING = "⟂missing"
OTHER = "⟂other"
MAX_CATEGORIES = 20
SD_GUARD = 1e-12


@dataclass
class FeatureMatrix:
    values: np.ndarray
    names: list[str]
    provenance: list[str]
    capped: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise ValueError("feature matrix shape does not match feature names")
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __len__(self) -> int:
        return self.values.shape[0]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown feature {name!r}") from None

    def rows(self, idx) -> FeatureMatrix:
        return FeatureMatrix(self.values[idx], list(self.names), list(self.provenance), list(self.capped))


@dataclass
class _ColumnEncoder:
    meta: ColumnMeta
    provenance: str
    kind: str  # numeric, boolean or categorical
    mean: float = 0.0
    sd: float = 1.0
    categories: list[str] = field(default_factory=list)
    pooled: bool = False
    has_missing: bool = False

    def names(self) -> list[str]:
        col = self.meta.name
        if self.kind in ("numeric", "boolean"):
            out = [col]
            if self.has_missing:
                out.append(f"{col}__missing")
            return out
        out = [f"{col}={c}" for c in self.categories]
        if self.pooled:
            out.append(f"{col}={OTHER}")
        if self.has_missing:
            out.append(f"{col}={MISSING}")
        return out

    def transform(self, values: pd.Series) -> np.ndarray:
        if self.kind in ("numeric", "boolean"):
            x = values.to_numpy(dtype=np.float64)
            miss = np.isnan(x)
            if self.kind == "boolean":
                z = np.where(miss, self.mean, x)
            else:
                z = np.zeros_like(x) if self.sd < SD_GUARD else (x - self.mean) / self.sd
                # mean imputation is 0 after standardization
                z = np.where(miss, 0.0, z)
            cols = [z]
            if self.has_missing:
                cols.append(miss.astype(np.float64))
            return np.column_stack(cols)
        v = values.to_numpy(dtype=object)
        miss = pd.isna(values).to_numpy()
        cols = [(v == c) & ~miss for c in self.categories]
        if self.pooled:
            known = np.zeros(len(v), dtype=bool)
            for c in cols:
                known |= c
            cols.append(~known & ~miss)
        if self.has_missing:
            cols.append(miss)
        if not cols:
            return np.zeros((len(v), 0))
        return np.column_stack(cols).astype(np.float64)


def _unwrap(table) -> tuple[Table, dict[str, str]]:
    if isinstance(table, AggregatedTable):
        return table.table, dict(table.provenance)
    return table, {}


class TableEncoder:
    """Fit an encoding on one or more tables sharing a column layout; apply it anywhere.

    * categorical -> indicators over the ``max_categories`` most frequent values,
      the rest pooled into ``⟂other``
    * boolean -> {0, 1}
    * numerical/datetime -> standardized with the fitted mean/sd (zeros when sd < 1e-12)
    * nulls -> mean-imputed, plus a missing indicator when the fitting data had nulls

    Id columns are never encoded. The encoder only ever sees feature columns.
    """

    def __init__(self, max_categories: int = MAX_CATEGORIES):
        self.max_categories = max_categories
        self.columns: list[_ColumnEncoder] = []
        self.capped: list[str] = []

    def fit(self, tables) -> TableEncoder:
        unwrapped = [_unwrap(t) for t in tables]
        first, provenance = unwrapped[0]
        metas = [c for c in first.meta.columns if c.sem_type != "id"]
        names = [c.name for c in metas]
        for t, _ in unwrapped[1:]:
            other = [c for c in t.meta.columns if c.sem_type != "id"]
            if [c.name for c in other] != names or [c.sem_type for c in other] != [c.sem_type for c in metas]:
                raise ValueError("tables must share feature column names and sem_types")
        self.columns = []
        self.capped = []
        for meta in metas:
            combined = pd.concat([t.data[meta.name] for t, _ in unwrapped], ignore_index=True)
            prov = provenance.get(meta.name, ORIGINAL)
            has_missing = bool(combined.isna().any())
            if meta.sem_type in NUMERIC_TYPES or meta.sem_type == "boolean":
                x = combined.to_numpy(dtype=np.float64)
                finite = x[~np.isnan(x)]
                mean = float(finite.mean()) if len(finite) else 0.0
                sd = float(finite.std()) if len(finite) else 0.0
                # booleans stay {0,1}; their nulls are imputed with the observed rate
                kind = "boolean" if meta.sem_type == "boolean" else "numeric"
                self.columns.append(_ColumnEncoder(meta, prov, kind, mean, sd, has_missing=has_missing))
            else:
                counts = combined.dropna().value_counts()
                ordered = sorted(counts.items(), key=lambda kv: (-kv[1], str(kv[0])))
                cats = [str(k) for k, _ in ordered[: self.max_categories]]
                pooled = len(ordered) > self.max_categories
                if pooled:
                    self.capped.append(meta.name)
                self.columns.append(
                    _ColumnEncoder(meta, prov, "categorical", categories=cats, pooled=pooled, has_missing=has_missing)
                )
        return self

    @property
    def feature_names(self) -> list[str]:
        return [n for c in self.columns for n in c.names()]

    @property
    def feature_provenance(self) -> list[str]:
        return [c.provenance for c in self.columns for _ in c.names()]

    def transform(self, table) -> FeatureMatrix:
        t, _ = _unwrap(table)
        n = len(t.data)
        blocks = [c.transform(t.data[c.meta.name]) for c in self.columns]
        values = np.column_stack(blocks) if blocks else np.zeros((n, 0))
        return FeatureMatrix(values.reshape(n, -1), self.feature_names, self.feature_provenance, list(self.capped))


def preprocess(real, syn, max_categories: int = MAX_CATEGORIES) -> tuple[FeatureMatrix, np.ndarray]:
    """Stack real over synthetic rows and encode them jointly; labels 1 = real, 0 = synthetic."""
    rt, _ = _unwrap(real)
    st, _ = _unwrap(syn)
    if rt.row_count == 0 or st.row_count == 0:
        raise ValueError("both tables must have at least one row")
    encoder = TableEncoder(max_categories).fit([real, syn])
    a, b = encoder.transform(real), encoder.transform(syn)
    X = FeatureMatrix(np.vstack([a.values, b.values]), a.names, a.provenance, list(encoder.capped))
    y = np.concatenate([np.ones(rt.row_count), np.zeros(st.row_count)])
    return X, y
