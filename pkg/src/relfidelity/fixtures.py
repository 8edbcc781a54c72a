"""Seeded pseudo-synthesizers, corruptions and toy databases for diagnostics.

Everything here is a pure function of its inputs and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd

from .aggregation import child_row_counts
from .relational import ColumnMeta, Database, ForeignKey, Schema, Table, TableMeta, subset_database

FIXTURE_KINDS = ("split_half", "shuffle_columns", "copy_fraction", "marginal_sampler")


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# Table-level operations


def split_half(table: Table, seed: int = 0) -> tuple[Table, Table]:
    """Random disjoint halves; the first gets the extra row when the count is odd."""
    n = len(table)
    if n < 4:
        raise ValueError(f"split_half needs at least 4 rows, got {n}")
    order = _rng(seed).permutation(n)
    cut = math.ceil(n / 2)
    return table.take(np.sort(order[:cut])), table.take(np.sort(order[cut:]))


def shuffle_columns(table: Table, seed: int = 0, columns=None) -> Table:
    """Permute each column independently (all but the primary key by default).

    Marginals are kept exactly; any dependence between columns is destroyed.
    """
    if columns is None:
        columns = [c for c in table.meta.column_names if c != table.meta.primary_key]
    rng = _rng(seed)
    data = table.data.copy()
    for c in columns:
        data[c] = data[c].to_numpy()[rng.permutation(len(data))]
    return Table(table.meta, data)


def copy_fraction(real_half: Table, perfect_half: Table, fraction: float, seed: int = 0) -> Table:
    """``ceil(fraction * n)`` rows copied verbatim from ``real_half``, the rest from ``perfect_half``.

    ``n`` is the size of ``real_half``. The non-copied rows are drawn without
    replacement when ``perfect_half`` is large enough. Output rows are shuffled.
    """
    if not 0.0 <= fraction <= 1.0 or math.isnan(fraction):
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    if real_half.meta.columns != perfect_half.meta.columns:
        raise ValueError("real and perfect halves must share a column layout")
    n = len(real_half)
    # round first so 0.3 * 10 does not become 4 through 3.0000000000000004
    n_copy = math.ceil(round(fraction * n, 9))
    rng = _rng(seed)
    copied = real_half.data.iloc[np.sort(rng.choice(n, n_copy, replace=False))]
    n_rest = n - n_copy
    m = len(perfect_half)
    if n_rest and m == 0:
        raise ValueError("perfect half is empty")
    rest_rows = rng.choice(m, n_rest, replace=n_rest > m) if n_rest else np.array([], dtype=np.int64)
    rest = perfect_half.data.iloc[np.sort(rest_rows)]
    data = pd.concat([copied, rest], ignore_index=True)
    data = data.iloc[rng.permutation(len(data))].reset_index(drop=True)
    return Table(real_half.meta, data)


# ---------------------------------------------------------------------------
# Database-level operations


def single_table_database(table: Table) -> Database:
    """Wrap one table as a database; its foreign keys are dropped from the metadata."""
    meta = TableMeta(table.meta.name, table.meta.primary_key, table.meta.columns)
    return Database(Schema((meta,)), {meta.name: Table(meta, table.data)})


def root_tables(db: Database) -> list[str]:
    return [t for t in db.schema.table_names if not db.schema.parents(t)]


def split_half_database(db: Database, table: str | None = None, seed: int = 0) -> tuple[Database, Database]:
    """Split ``table`` (default: the first root table) in half; descendants follow their rows."""
    table = table or root_tables(db)[0]
    n = len(db[table])
    if n < 4:
        raise ValueError(f"split_half needs at least 4 rows, got {n}")
    order = _rng(seed).permutation(n)
    cut = math.ceil(n / 2)
    return subset_database(db, table, np.sort(order[:cut])), subset_database(db, table, np.sort(order[cut:]))


def permute_foreign_key(db: Database, child: str, column: str, seed: int = 0) -> Database:
    """Shuffle one foreign-key column across child rows.

    Every parent keeps its child count and every column keeps its values, but
    which parent a child row belongs to becomes random.
    """
    t = db[child]
    return db.replace(**{child: shuffle_columns(t, seed, [column])})


def resample_database(db: Database, table: str | None = None, seed: int = 0) -> Database:
    """Draw rows of ``table`` with replacement; every draw brings its own copy of its descendants.

    Copies get keys of the form ``<old key>~<draw index>`` so they stay unique and
    referentially sound. Tables outside ``table``'s subtree are left unchanged.
    A descendant linked to the subtree through more than one foreign key is
    rejected, since its copies would be ambiguous.
    """
    table = table or root_tables(db)[0]
    src = db[table]
    n = len(src)
    draws = _rng(seed).integers(0, n, n)
    tags = np.arange(n).astype(str).astype(object)
    data = src.data.iloc[draws].reset_index(drop=True)
    pk = src.meta.primary_key
    copies: dict[str, pd.DataFrame] = {}
    if pk is not None:
        old = data[pk].to_numpy()
        data[pk] = old + "~" + tags
        copies[table] = pd.DataFrame({"old": old, "new": data[pk].to_numpy(), "tag": tags})
    out = {table: Table(src.meta, data)}
    for name in db.schema.topological_order():
        if name == table:
            continue
        links = [r for r in db.schema.parents(name) if r.parent in copies]
        if not links:
            continue
        if len(links) > 1:
            raise ValueError(f"table {name!r} links to the resampled subtree through several foreign keys")
        rel = links[0]
        child = db[name]
        merged = copies[rel.parent].merge(child.data, left_on="old", right_on=rel.column, how="inner")
        frame = merged[child.meta.column_names].copy()
        frame[rel.column] = merged["new"].to_numpy()
        cpk = child.meta.primary_key
        if cpk is not None:
            old = merged[cpk].to_numpy()
            frame[cpk] = old + "~" + merged["tag"].to_numpy()
            copies[name] = pd.DataFrame({"old": old, "new": frame[cpk].to_numpy(), "tag": merged["tag"].to_numpy()})
        out[name] = Table(child.meta, frame.reset_index(drop=True))
    return db.replace(**out)


def _fresh_ids(name: str, n: int) -> np.ndarray:
    return np.array([f"{name}-{i}" for i in range(n)], dtype=object)


def marginal_sampler(db: Database, seed: int = 0) -> Database:
    """Baseline generator that keeps per-column and child-count marginals only.

    Root tables keep their row count and keys. Every attribute is resampled with
    replacement from its own column. For a child table, each new parent row
    draws a child count from the empirical count distribution of the first
    foreign key; further foreign keys are drawn uniformly from the parent's keys.
    """
    rng = _rng(seed)
    out: dict[str, Table] = {}
    for name in db.schema.topological_order():
        src = db[name]
        meta = src.meta
        rels = db.schema.parents(name)
        if rels:
            first = rels[0]
            parent_keys = out[first.parent].data[out[first.parent].meta.primary_key].to_numpy()
            counts = rng.choice(child_row_counts(db, first), len(parent_keys), replace=True)
            n = int(counts.sum())
        else:
            n = len(src)
        data = {}
        for col in meta.columns:
            values = src.data[col.name].to_numpy()
            if col.name == meta.primary_key:
                data[col.name] = values.copy() if not rels else _fresh_ids(name, n)
            elif rels and col.name == rels[0].column:
                data[col.name] = np.repeat(parent_keys, counts)
            elif any(r.column == col.name for r in rels):
                rel = next(r for r in rels if r.column == col.name)
                keys = out[rel.parent].data[out[rel.parent].meta.primary_key].to_numpy()
                data[col.name] = keys[rng.integers(0, len(keys), n)] if len(keys) else np.full(n, None)
            elif len(values):
                data[col.name] = values[rng.integers(0, len(values), n)]
            else:
                data[col.name] = np.full(n, None)
        frame = pd.DataFrame(data, columns=meta.column_names)
        for col in meta.columns:
            if col.sem_type not in ("id", "categorical"):
                frame[col.name] = frame[col.name].astype(np.float64)
        out[name] = Table(meta, frame)
    return Database(db.schema, out)


@dataclass(frozen=True)
class FixtureSpec:
    """A named pseudo-synthesizer producing a (real, synthetic) pair from one database."""

    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in FIXTURE_KINDS:
            raise ValueError(f"unknown fixture kind {self.kind!r}; expected one of {FIXTURE_KINDS}")

    def generate(self, db: Database) -> tuple[Database, Database]:
        if self.kind == "marginal_sampler":
            return db, marginal_sampler(db, self.seed)
        table = self.params.get("table") or root_tables(db)[0]
        real, perfect = split_half_database(db, table, self.seed)
        if self.kind == "split_half":
            return real, perfect
        if self.kind == "shuffle_columns":
            t = perfect[table]
            cols = [c.name for c in t.meta.attributes]
            return real, perfect.replace(**{table: shuffle_columns(t, self.seed + 1, cols)})
        fraction = float(self.params.get("fraction", 1.0))
        syn = copy_fraction(real[table], perfect[table], fraction, self.seed + 1)
        return single_table_database(real[table]), single_table_database(syn)


# ---------------------------------------------------------------------------
# Toy databases


def _single_table(name: str, pk: str, frame: pd.DataFrame, types: dict[str, str]) -> Database:
    frame.insert(0, pk, _fresh_ids(name, len(frame)))
    columns = (ColumnMeta(pk, "id"),) + tuple(ColumnMeta(c, t) for c, t in types.items())
    meta = TableMeta(name, pk, columns)
    return Database(Schema((meta,)), {name: Table(meta, frame)})


def correlated_database(n: int = 2000, rho: float = 0.9, seed: int = 0) -> Database:
    """Single table of three uniform columns with pairwise Pearson correlation ``rho``.

    With probability ``rho`` a row repeats one uniform draw in all three columns;
    otherwise the columns are independent. The dependence is mostly a diagonal
    ridge, which trees find easily once the columns are shuffled apart.
    """
    rng = _rng(seed)
    tied = rng.random(n) < rho
    u = rng.random(n)
    cols = {}
    for name in ("a", "b", "c"):
        cols[name] = np.where(tied, u, rng.random(n))
    return _single_table("points", "point_id", pd.DataFrame(cols), {c: "numerical" for c in cols})


REGIONS = np.array(["north", "south", "east", "west", "central"], dtype=object)
REGION_WEIGHTS = np.array([0.35, 0.25, 0.2, 0.15, 0.05])
REGION_EFFECT = {"north": 0.0, "south": 0.5, "east": -0.3, "west": 0.8, "central": -0.6}
CHANNELS = np.array(["store", "online", "phone"], dtype=object)
REASONS = np.array(["damaged", "late", "unwanted", "wrong item"], dtype=object)


def retail_database(n_stores: int = 2000, seed: int = 0, mean_sales: float = 8.0, returns: bool = True) -> Database:
    """Stores with sales (and optionally returns of sales).

    ``stores`` carries five attributes of every non-key type: ``size``
    (numerical), ``region`` (categorical), ``opened`` (datetime), ``franchise``
    (boolean) and ``rating`` (numerical, driven by the others and by the store's
    sales). Sales per store follow an overdispersed Poisson whose mean grows with
    store size, so the count distribution is wide.
    """
    rng = _rng(seed)
    size = rng.lognormal(0.0, 0.5, n_stores)
    region = REGIONS[rng.choice(len(REGIONS), n_stores, p=REGION_WEIGHTS)]
    opened = pd.Timestamp("2000-01-01").value / 1e9 + rng.uniform(0, 20 * 365.25 * 86400, n_stores)
    opened = np.floor(opened)
    franchise = (rng.random(n_stores) < 0.3).astype(np.float64)

    rate = mean_sales * size / np.exp(0.125) * rng.gamma(2.0, 0.5, n_stores)
    n_sales = rng.poisson(rate)
    store_ids = _fresh_ids("store", n_stores)
    sale_store = np.repeat(np.arange(n_stores), n_sales)
    amount = np.round(rng.lognormal(3.0 + 0.3 * np.log(size[sale_store]), 0.4), 2)
    channel = CHANNELS[rng.choice(len(CHANNELS), len(sale_store), p=[0.6, 0.3, 0.1])]

    mean_amount = np.zeros(n_stores)
    np.add.at(mean_amount, sale_store, amount)
    mean_amount = np.divide(mean_amount, n_sales, out=np.full(n_stores, 20.0), where=n_sales > 0)
    effect = np.array([REGION_EFFECT[r] for r in region])
    rating = 1.5 * np.log(size) + effect + 0.5 * franchise + 0.05 * mean_amount + rng.normal(0, 0.3, n_stores)

    stores = pd.DataFrame(
        {
            "store_id": store_ids,
            "size": size,
            "region": region,
            "opened": opened,
            "franchise": franchise,
            "rating": rating,
        }
    )
    sales = pd.DataFrame(
        {
            "sale_id": _fresh_ids("sale", len(sale_store)),
            "store_id": store_ids[sale_store],
            "amount": amount,
            "channel": channel,
        }
    )
    store_meta = TableMeta(
        "stores",
        "store_id",
        (
            ColumnMeta("store_id", "id"),
            ColumnMeta("size", "numerical"),
            ColumnMeta("region", "categorical"),
            ColumnMeta("opened", "datetime", "%Y-%m-%d %H:%M:%S"),
            ColumnMeta("franchise", "boolean"),
            ColumnMeta("rating", "numerical"),
        ),
    )
    sale_meta = TableMeta(
        "sales",
        "sale_id",
        (
            ColumnMeta("sale_id", "id"),
            ColumnMeta("store_id", "id"),
            ColumnMeta("amount", "numerical"),
            ColumnMeta("channel", "categorical"),
        ),
        (ForeignKey("store_id", "stores", "store_id"),),
    )
    metas = [store_meta, sale_meta]
    tables = {"stores": Table(store_meta, stores), "sales": Table(sale_meta, sales)}
    if returns:
        returned = rng.random(len(sales)) < 0.1
        n_ret = int(returned.sum())
        ret_meta = TableMeta(
            "returns",
            "return_id",
            (ColumnMeta("return_id", "id"), ColumnMeta("sale_id", "id"), ColumnMeta("reason", "categorical")),
            (ForeignKey("sale_id", "sales", "sale_id"),),
        )
        ret = pd.DataFrame(
            {
                "return_id": _fresh_ids("return", n_ret),
                "sale_id": sales["sale_id"].to_numpy()[returned],
                "reason": REASONS[rng.integers(0, len(REASONS), n_ret)],
            }
        )
        metas.append(ret_meta)
        tables["returns"] = Table(ret_meta, ret)
    return Database(Schema(tuple(metas)), tables)


def linked_database(n_parents: int = 1000, seed: int = 0, slope: float = 3.0) -> Database:
    """Customers with orders whose value tracks the customer's ``x``.

    Customers with larger ``x`` place more orders (mean ``2 exp(x)``, at least
    one), and each order's ``y`` is ``slope * x`` plus unit noise.
    """
    rng = _rng(seed)
    x = rng.normal(0.0, 0.7, n_parents)
    counts = 1 + rng.poisson(2.0 * np.exp(x))
    owner = np.repeat(np.arange(n_parents), counts)
    y = slope * x[owner] + rng.normal(0.0, 1.0, len(owner))
    cust_ids = _fresh_ids("customer", n_parents)
    cust_meta = TableMeta("customers", "customer_id", (ColumnMeta("customer_id", "id"), ColumnMeta("x", "numerical")))
    order_meta = TableMeta(
        "orders",
        "order_id",
        (ColumnMeta("order_id", "id"), ColumnMeta("customer_id", "id"), ColumnMeta("y", "numerical")),
        (ForeignKey("customer_id", "customers", "customer_id"),),
    )
    customers = pd.DataFrame({"customer_id": cust_ids, "x": x})
    orders = pd.DataFrame({"order_id": _fresh_ids("order", len(owner)), "customer_id": cust_ids[owner], "y": y})
    return Database(
        Schema((cust_meta, order_meta)),
        {"customers": Table(cust_meta, customers), "orders": Table(order_meta, orders)},
    )
