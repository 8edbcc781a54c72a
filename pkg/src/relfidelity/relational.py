"""Relational database model: schema metadata, typed tables, loading and validation.

Tables are held as pandas DataFrames whose columns are coerced to one of five
semantic types:

* ``id`` and ``categorical`` -- strings (``None`` for nulls)
* ``numerical`` -- float64 (``NaN`` for nulls)
* ``boolean`` -- float64 in {0, 1} (``NaN`` for nulls)
* ``datetime`` -- float64 seconds since the Unix epoch (``NaN`` for nulls)

A loaded :class:`Database` is treated as immutable; every transformation in the
package returns new objects.
"""

from __future__ import annotations

import json
import logging
import os
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SEM_TYPES = ("id", "categorical", "numerical", "boolean", "datetime")
NUMERIC_TYPES = ("numerical", "datetime")
DISCRETE_TYPES = ("categorical", "boolean")

_EPOCH = pd.Timestamp("1970-01-01")
_TRUE = {"true", "t", "yes", "y", "1", "1.0"}
_FALSE = {"false", "f", "no", "n", "0", "0.0"}


class SchemaError(ValueError):
    """Raised when metadata is malformed or inconsistent."""


class DataError(ValueError):
    """Raised when table files do not match their metadata."""


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    sem_type: str
    datetime_format: str | None = None

    def __post_init__(self):
        if self.sem_type not in SEM_TYPES:
            raise SchemaError(f"unknown sem_type {self.sem_type!r} for column {self.name!r}")


@dataclass(frozen=True)
class ForeignKey:
    column: str
    parent_table: str
    parent_key: str


@dataclass(frozen=True)
class Relationship:
    """A single-column link ``child.column -> parent.primary_key``."""

    parent: str
    child: str
    column: str

    def __str__(self) -> str:
        return f"{self.child}.{self.column}->{self.parent}"


@dataclass(frozen=True)
class TableMeta:
    name: str
    primary_key: str | None
    columns: tuple[ColumnMeta, ...]
    foreign_keys: tuple[ForeignKey, ...] = ()

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate column names in table {self.name!r}")
        by_name = dict(zip(names, self.columns))
        if self.primary_key is not None:
            if self.primary_key not in by_name:
                raise SchemaError(
                    f"primary key {self.primary_key!r} is not a column of table {self.name!r}"
                )
            if by_name[self.primary_key].sem_type != "id":
                raise SchemaError(f"primary key {self.name}.{self.primary_key} must be of sem_type id")
        for fk in self.foreign_keys:
            if fk.column not in by_name:
                raise SchemaError(f"foreign key column {self.name}.{fk.column} is not declared")
            if by_name[fk.column].sem_type != "id":
                raise SchemaError(f"foreign key {self.name}.{fk.column} must be of sem_type id")

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> ColumnMeta:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(f"table {self.name!r} has no column {name!r}")

    @property
    def attributes(self) -> list[ColumnMeta]:
        """Non-key columns (everything whose sem_type is not ``id``)."""
        return [c for c in self.columns if c.sem_type != "id"]


@dataclass(frozen=True)
class Schema:
    tables: tuple[TableMeta, ...]

    def __post_init__(self):
        names = [t.name for t in self.tables]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate table names in schema")
        by_name = dict(zip(names, self.tables))
        for t in self.tables:
            for fk in t.foreign_keys:
                parent = by_name.get(fk.parent_table)
                if parent is None:
                    raise SchemaError(
                        f"foreign key {t.name}.{fk.column} references undeclared table {fk.parent_table!r}"
                    )
                if parent.primary_key != fk.parent_key:
                    raise SchemaError(
                        f"foreign key {t.name}.{fk.column} must reference the primary key of "
                        f"{fk.parent_table!r}, not {fk.parent_key!r}"
                    )

    @property
    def table_names(self) -> list[str]:
        return [t.name for t in self.tables]

    def table(self, name: str) -> TableMeta:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(f"unknown table {name!r}")

    def relationships(self) -> list[Relationship]:
        return [
            Relationship(fk.parent_table, t.name, fk.column)
            for t in self.tables
            for fk in t.foreign_keys
        ]

    def children(self, parent: str) -> list[Relationship]:
        return [r for r in self.relationships() if r.parent == parent]

    def parents(self, child: str) -> list[Relationship]:
        return [r for r in self.relationships() if r.child == child]

    def relationship(self, parent: str, child: str, column: str | None = None) -> Relationship:
        found = [
            r
            for r in self.relationships()
            if r.parent == parent and r.child == child and (column is None or r.column == column)
        ]
        if not found:
            raise KeyError(f"no relationship between parent {parent!r} and child {child!r}")
        if len(found) > 1:
            cols = ", ".join(r.column for r in found)
            raise KeyError(
                f"ambiguous relationship between {parent!r} and {child!r}: foreign keys {cols}"
            )
        return found[0]

    def topological_order(self) -> list[str]:
        """Table names with every parent before its children."""
        order: list[str] = []
        pending = list(self.table_names)
        while pending:
            progressed = False
            for name in list(pending):
                deps = {r.parent for r in self.parents(name) if r.parent != name}
                if deps <= set(order):
                    order.append(name)
                    pending.remove(name)
                    progressed = True
            if not progressed:
                # cycles are legal in SQL but not in any dataset we evaluate
                raise SchemaError(f"cyclic foreign keys among tables {pending}")
        return order

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> Schema:
        if "tables" not in doc or not isinstance(doc["tables"], Mapping):
            raise SchemaError("metadata must contain a 'tables' object")
        tables = []
        for name, tdoc in doc["tables"].items():
            pk = tdoc.get("primary_key")
            if isinstance(pk, (list, tuple)):
                raise SchemaError(f"composite primary key on table {name!r} is not supported")
            columns = []
            for cname, cdoc in tdoc.get("columns", {}).items():
                sem_type = cdoc.get("sdtype", cdoc.get("sem_type"))
                columns.append(ColumnMeta(cname, sem_type, cdoc.get("datetime_format")))
            fks = []
            for fdoc in tdoc.get("foreign_keys", []):
                if isinstance(fdoc.get("column"), (list, tuple)) or isinstance(
                    fdoc.get("parent_key"), (list, tuple)
                ):
                    raise SchemaError(f"composite foreign key on table {name!r} is not supported")
                fks.append(ForeignKey(fdoc["column"], fdoc["parent_table"], fdoc["parent_key"]))
            tables.append(TableMeta(name, pk, tuple(columns), tuple(fks)))
        return cls(tuple(tables))

    def to_dict(self) -> dict[str, Any]:
        tables: dict[str, Any] = {}
        for t in self.tables:
            cols = {}
            for c in t.columns:
                cdoc: dict[str, Any] = {"sdtype": c.sem_type}
                if c.datetime_format is not None:
                    cdoc["datetime_format"] = c.datetime_format
                cols[c.name] = cdoc
            tables[t.name] = {
                "primary_key": t.primary_key,
                "columns": cols,
                "foreign_keys": [
                    {"column": fk.column, "parent_table": fk.parent_table, "parent_key": fk.parent_key}
                    for fk in t.foreign_keys
                ],
            }
        return {"tables": tables}


@dataclass
class Table:
    """A typed table. ``data`` holds exactly the declared columns, in order."""

    meta: TableMeta
    data: pd.DataFrame

    def __post_init__(self):
        if list(self.data.columns) != self.meta.column_names:
            raise DataError(
                f"table {self.meta.name!r} columns {list(self.data.columns)} do not match "
                f"metadata {self.meta.column_names}"
            )
        if not isinstance(self.data.index, pd.RangeIndex) or self.data.index.start != 0:
            self.data = self.data.reset_index(drop=True)

    @property
    def name(self) -> str:
        return self.meta.name

    @property
    def row_count(self) -> int:
        return len(self.data)

    def __len__(self) -> int:
        return len(self.data)

    def column(self, name: str) -> pd.Series:
        return self.data[name]

    def select(self, columns: list[str]) -> Table:
        """Sub-table with the given columns (metadata filtered accordingly)."""
        metas = tuple(self.meta.column(c) for c in columns)
        pk = self.meta.primary_key if self.meta.primary_key in columns else None
        fks = tuple(fk for fk in self.meta.foreign_keys if fk.column in columns)
        return Table(TableMeta(self.meta.name, pk, metas, fks), self.data[list(columns)].copy())

    def take(self, rows: np.ndarray) -> Table:
        """Rows by position (duplicates allowed)."""
        return Table(self.meta, self.data.iloc[np.asarray(rows, dtype=np.int64)].reset_index(drop=True))

    def equals(self, other: Table) -> bool:
        return self.meta == other.meta and self.data.equals(other.data)


@dataclass
class Database:
    schema: Schema
    tables: dict[str, Table] = field(default_factory=dict)

    def __post_init__(self):
        missing = [n for n in self.schema.table_names if n not in self.tables]
        if missing:
            raise DataError(f"missing table(s) {missing}")
        for name, table in self.tables.items():
            if table.meta != self.schema.table(name):
                raise DataError(f"table {name!r} metadata differs from the schema")

    def __getitem__(self, name: str) -> Table:
        try:
            return self.tables[name]
        except KeyError:
            raise KeyError(f"unknown table {name!r}") from None

    def __iter__(self) -> Iterator[Table]:
        return (self.tables[n] for n in self.schema.table_names)

    def replace(self, **tables: Table) -> Database:
        """Copy of the database with some tables swapped out."""
        new = dict(self.tables)
        new.update(tables)
        return Database(self.schema, new)

    def equals(self, other: Database) -> bool:
        return self.schema == other.schema and all(
            self.tables[n].equals(other.tables[n]) for n in self.schema.table_names
        )


# ---------------------------------------------------------------------------
# Coercion


def _parse_bool(value: str) -> float:
    v = value.strip().lower()
    if v in _TRUE:
        return 1.0
    if v in _FALSE:
        return 0.0
    return np.nan


def _parse_float(value) -> float:
    if value is None or isinstance(value, float):
        return np.nan if value is None else value
    try:
        # float() is correctly rounded, unlike pandas' fast parser
        return float(str(value).strip())
    except ValueError:
        return np.nan


def coerce_column(raw: pd.Series, meta: ColumnMeta) -> pd.Series:
    """Convert a column of raw strings ('' = null) to its semantic representation."""
    raw = raw.astype(object)
    nulls = raw.isna() | (raw == "")
    if meta.sem_type in ("id", "categorical"):
        out = raw.where(~nulls, None).map(lambda v: v if v is None else str(v))
        return out.astype(object)
    if meta.sem_type == "numerical":
        return raw.where(~nulls, None).map(_parse_float).astype("float64")
    if meta.sem_type == "boolean":
        out = raw.map(lambda v: np.nan if v is None or (isinstance(v, float) and np.isnan(v)) else _parse_bool(str(v)))
        return out.astype("float64")
    # datetime
    text = raw.where(~nulls, None)
    if meta.datetime_format is not None:
        ts = pd.to_datetime(text, format=meta.datetime_format, errors="coerce")
    else:
        ts = pd.to_datetime(text, errors="coerce", format="mixed")
    if getattr(ts.dt, "tz", None) is not None:
        ts = ts.dt.tz_convert("UTC").dt.tz_localize(None)
    seconds = (ts - _EPOCH).dt.total_seconds()
    return seconds.astype("float64")


def _format_column(values: pd.Series, meta: ColumnMeta) -> pd.Series:
    if meta.sem_type in ("id", "categorical"):
        return values.map(lambda v: "" if v is None else v)
    if meta.sem_type == "numerical":
        return values.map(lambda v: "" if np.isnan(v) else repr(float(v)))
    if meta.sem_type == "boolean":
        return values.map(lambda v: "" if np.isnan(v) else ("True" if v else "False"))
    ts = _EPOCH + pd.to_timedelta(values, unit="s")
    if meta.datetime_format is not None:
        return ts.map(lambda t: "" if pd.isna(t) else t.strftime(meta.datetime_format))
    return ts.map(lambda t: "" if pd.isna(t) else t.isoformat())


# ---------------------------------------------------------------------------
# I/O


def load_schema(metadata_path: str | os.PathLike) -> Schema:
    try:
        with open(metadata_path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"cannot parse metadata {metadata_path}: {exc}") from exc
    return Schema.from_dict(doc)


def read_table(path: str | os.PathLike, meta: TableMeta) -> Table:
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[], encoding="utf-8")
    missing = [c for c in meta.column_names if c not in raw.columns]
    if missing:
        raise DataError(f"table {meta.name!r} file {path} lacks declared column(s) {missing}")
    extra = [c for c in raw.columns if c not in meta.column_names]
    if extra:
        logger.warning("ignoring undeclared column(s) %s in %s", extra, path)
    data = pd.DataFrame({c.name: coerce_column(raw[c.name], c) for c in meta.columns})
    return Table(meta, data)


def load_database(
    metadata_path: str | os.PathLike,
    data_dir: str | os.PathLike,
    schema: Schema | None = None,
) -> Database:
    """Load ``<data_dir>/<table>.csv`` for every table declared in the metadata."""
    schema = schema if schema is not None else load_schema(metadata_path)
    data_dir = Path(data_dir)
    tables = {}
    for meta in schema.tables:
        path = data_dir / f"{meta.name}.csv"
        if not path.is_file():
            raise DataError(f"missing table file for table {meta.name!r}: {path}")
        tables[meta.name] = read_table(path, meta)
    return Database(schema, tables)


def save_database(db: Database, metadata_path: str | os.PathLike, data_dir: str | os.PathLike) -> None:
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    with open(metadata_path, "w", encoding="utf-8") as fh:
        json.dump(db.schema.to_dict(), fh, indent=2)
    for table in db:
        out = pd.DataFrame(
            {c.name: _format_column(table.data[c.name], c) for c in table.meta.columns},
            columns=table.meta.column_names,
        )
        out.to_csv(data_dir / f"{table.name}.csv", index=False, encoding="utf-8")


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    kind: str
    table: str
    column: str
    count: int
    examples: tuple[str, ...] = ()

    def __str__(self) -> str:
        ex = f" e.g. {', '.join(self.examples)}" if self.examples else ""
        return f"{self.kind}: {self.table}.{self.column} ({self.count} row(s)){ex}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


def validate(db: Database) -> ValidationReport:
    """Check primary-key uniqueness/non-nullness and foreign-key resolution."""
    report = ValidationReport()
    for table in db:
        pk = table.meta.primary_key
        if pk is None:
            continue
        keys = table.data[pk]
        n_null = int(keys.isna().sum())
        if n_null:
            report.violations.append(Violation("null primary key", table.name, pk, n_null))
        dup = keys[keys.notna() & keys.duplicated(keep=False)]
        if len(dup):
            values = sorted(set(dup))
            report.violations.append(
                Violation("duplicate primary key", table.name, pk, len(dup), tuple(values[:5]))
            )
    for rel in db.schema.relationships():
        parent = db[rel.parent]
        fk = db[rel.child].data[rel.column]
        present = fk.notna()
        dangling = fk[present & ~fk.isin(parent.data[parent.meta.primary_key])]
        if len(dangling):
            values = sorted(set(dangling))
            report.violations.append(
                Violation("dangling foreign key", rel.child, rel.column, len(dangling), tuple(values[:5]))
            )
    return report


# ---------------------------------------------------------------------------
# Denormalization


def denormalize(db: Database, parent: str, child: str) -> Table:
    """Inner-join child rows with their parent's attributes; key columns are dropped.

    Parent attributes are prefixed ``<parent>__`` to avoid name collisions.
    """
    try:
        rel = db.schema.relationship(parent, child)
    except KeyError as exc:
        raise SchemaError(str(exc.args[0])) from None
    p, c = db[parent], db[child]
    p_attrs = p.meta.attributes
    c_attrs = c.meta.attributes
    lhs = c.data[[rel.column] + [a.name for a in c_attrs]]
    rhs = p.data[[p.meta.primary_key] + [a.name for a in p_attrs]].rename(
        columns={a.name: f"{parent}__{a.name}" for a in p_attrs}
    )
    joined = lhs.merge(
        rhs, how="inner", left_on=rel.column, right_on=p.meta.primary_key, sort=False
    )
    columns = list(c_attrs) + [ColumnMeta(f"{parent}__{a.name}", a.sem_type, a.datetime_format) for a in p_attrs]
    data = joined[[m.name for m in columns]].reset_index(drop=True)
    return Table(TableMeta(f"{child}__{parent}", None, tuple(columns)), data)


def subset_database(db: Database, table: str, rows) -> Database:
    """Keep ``rows`` (positions) of ``table`` and the descendant rows that still resolve.

    Tables that do not descend from ``table`` are returned unchanged.
    """
    kept = {table: db[table].take(np.asarray(rows, dtype=np.int64))}
    for name in db.schema.topological_order():
        if name == table:
            continue
        rels = [r for r in db.schema.parents(name) if r.parent in kept]
        if not rels:
            continue
        data = db[name].data
        keep = np.ones(len(data), dtype=bool)
        for rel in rels:
            parent = kept[rel.parent]
            fk = data[rel.column]
            keep &= (fk.isna() | fk.isin(parent.data[parent.meta.primary_key])).to_numpy()
        kept[name] = db[name].take(np.flatnonzero(keep))
    return db.replace(**kept)
