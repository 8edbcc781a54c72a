"""Child-table aggregation features for a target table.

For every child table of the target we append, one value per target row:

* ``<child>__count`` -- number of child rows referencing the target row
* ``<child>__<col>__mean`` -- mean of each numerical/datetime child column
* ``<child>__<col>__nunique`` -- distinct values of each categorical/boolean child column
* ``<child>__<grandchild>__count_mean`` -- mean over the target row's child rows of
  their grandchild row counts

Empty groups give count 0, mean NaN and nunique 0. When a child references the
target through several foreign keys, each key gets its own namespace
``<child>[<fk>]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .relational import (
    DISCRETE_TYPES,
    NUMERIC_TYPES,
    ColumnMeta,
    Database,
    Relationship,
    SchemaError,
    Table,
    TableMeta,
)

ORIGINAL = "original"
AGGREGATE = "aggregate"


@dataclass(frozen=True)
class AggregationSpec:
    numerical: tuple[str, ...] = ("mean",)
    categorical: tuple[str, ...] = ("nunique",)
    counts: bool = True
    grandchild_counts: bool = True

    def __post_init__(self):
        if set(self.numerical) - {"mean"}:
            raise ValueError(f"unsupported numerical aggregation(s) {set(self.numerical) - {'mean'}}")
        if set(self.categorical) - {"nunique"}:
            raise ValueError(
                f"unsupported categorical aggregation(s) {set(self.categorical) - {'nunique'}}"
            )


@dataclass
class AggregatedTable:
    """Target table plus aggregate columns; ``provenance`` maps column -> original/aggregate."""

    table: Table
    provenance: dict[str, str] = field(default_factory=dict)

    @property
    def data(self) -> pd.DataFrame:
        return self.table.data

    @property
    def meta(self) -> TableMeta:
        return self.table.meta

    @property
    def name(self) -> str:
        return self.table.name

    @property
    def row_count(self) -> int:
        return self.table.row_count

    def __len__(self) -> int:
        return len(self.table)

    @property
    def aggregate_columns(self) -> list[str]:
        return [c for c, p in self.provenance.items() if p == AGGREGATE]


def _resolve(db: Database, relationship) -> Relationship:
    if isinstance(relationship, Relationship):
        rel = relationship
    else:
        rel = Relationship(*relationship)
    if rel not in db.schema.relationships():
        raise KeyError(f"unknown relationship {rel}")
    return rel


def _group_keys(db: Database, rel: Relationship) -> tuple[pd.Index, pd.Series]:
    parent = db[rel.parent]
    pk = parent.data[parent.meta.primary_key]
    return pd.Index(pk), db[rel.child].data[rel.column]


def child_row_counts(db: Database, relationship) -> np.ndarray:
    """Number of child rows per parent row (0 for childless parents)."""
    rel = _resolve(db, relationship)
    pk, fk = _group_keys(db, rel)
    counts = fk.dropna().value_counts()
    return pk.map(counts).fillna(0).to_numpy(dtype=np.float64).astype(np.int64)


def _namespace(db: Database, rel: Relationship) -> str:
    siblings = [r for r in db.schema.relationships() if r.parent == rel.parent and r.child == rel.child]
    return rel.child if len(siblings) == 1 else f"{rel.child}[{rel.column}]"


def relational_aggregation(
    db: Database, target: str, spec: AggregationSpec | None = None
) -> AggregatedTable:
    spec = spec or AggregationSpec()
    if target not in db.schema.table_names:
        raise KeyError(f"unknown target table {target!r}")
    base = db[target]
    provenance = {c: ORIGINAL for c in base.meta.column_names}
    columns: list[ColumnMeta] = list(base.meta.columns)
    new: dict[str, np.ndarray] = {}

    def add(name: str, values: np.ndarray) -> None:
        if name in provenance:
            raise SchemaError(f"aggregate column name collision: {name!r}")
        provenance[name] = AGGREGATE
        columns.append(ColumnMeta(name, "numerical"))
        new[name] = np.asarray(values, dtype=np.float64)

    for rel in db.schema.children(target):
        ns = _namespace(db, rel)
        child = db[rel.child]
        pk, fk = _group_keys(db, rel)
        linked = child.data[fk.notna()]
        groups = linked.groupby(rel.column, sort=False)

        if spec.counts:
            add(f"{ns}__count", pk.map(groups.size()).fillna(0).to_numpy(dtype=np.float64))

        for col in child.meta.attributes:
            if col.sem_type in NUMERIC_TYPES:
                for fn in spec.numerical:
                    # mean skips NaN; all-null and empty groups stay NaN
                    stat = groups[col.name].mean()
                    add(f"{ns}__{col.name}__{fn}", pk.map(stat).to_numpy(dtype=np.float64))
            elif col.sem_type in DISCRETE_TYPES:
                for fn in spec.categorical:
                    stat = groups[col.name].nunique(dropna=True)
                    add(f"{ns}__{col.name}__{fn}", pk.map(stat).fillna(0).to_numpy(dtype=np.float64))

        if spec.grandchild_counts and child.meta.primary_key is not None:
            for grel in db.schema.children(rel.child):
                gns = _namespace(db, grel)
                per_child = pd.Series(child_row_counts(db, grel), index=child.data.index, dtype=np.float64)
                per_child = per_child[fk.notna()]
                stat = per_child.groupby(linked[rel.column].to_numpy(), sort=False).mean()
                add(f"{ns}__{gns}__count_mean", pk.map(stat).to_numpy(dtype=np.float64))

    data = pd.concat([base.data, pd.DataFrame(new, index=base.data.index)], axis=1) if new else base.data.copy()
    meta = TableMeta(target, base.meta.primary_key, tuple(columns), base.meta.foreign_keys)
    return AggregatedTable(Table(meta, data), provenance)
