import json

import numpy as np
import pandas as pd
import pytest

from relfidelity.relational import ColumnMeta, Database, ForeignKey, Schema, Table, TableMeta

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def make_store_sales(store_attr=(1.0, 2.0), sales=(("S1", 10.0, "a"), ("S1", 20.0, "b"), ("S2", 30.0, "a"))):
    stores = TableMeta(
        "store", "store_id", (ColumnMeta("store_id", "id"), ColumnMeta("size", "numerical"))
    )
    sales_meta = TableMeta(
        "sales",
        "sale_id",
        (
            ColumnMeta("sale_id", "id"),
            ColumnMeta("store_id", "id"),
            ColumnMeta("value", "numerical"),
            ColumnMeta("cat", "categorical"),
        ),
        (ForeignKey("store_id", "store", "store_id"),),
    )
    store_ids = [f"S{i + 1}" for i in range(len(store_attr))]
    store_df = pd.DataFrame({"store_id": store_ids, "size": np.asarray(store_attr, dtype=float)})
    sales_df = pd.DataFrame(
        {
            "sale_id": [f"x{i}" for i in range(len(sales))],
            "store_id": pd.Series([s[0] for s in sales], dtype=object),
            "value": pd.Series([s[1] for s in sales], dtype=float),
            "cat": pd.Series([s[2] for s in sales], dtype=object),
        }
    )
    return Database(
        Schema((stores, sales_meta)), {"store": Table(stores, store_df), "sales": Table(sales_meta, sales_df)}
    )


def database_with_counts(counts):
    """Stores whose sales-per-store equal ``counts``."""
    sales = [(f"S{i + 1}", 1.0, "a") for i, c in enumerate(counts) for _ in range(c)]
    return make_store_sales(store_attr=np.arange(len(counts), dtype=float), sales=sales)


@pytest.fixture
def store_sales():
    return make_store_sales()


@pytest.fixture
def store_sales_files(tmp_path):
    meta = {
        "tables": {
            "store": {
                "primary_key": "store_id",
                "columns": {
                    "store_id": {"sdtype": "id"},
                    "size": {"sdtype": "numerical"},
                    "opened": {"sdtype": "datetime", "datetime_format": "%Y-%m-%d"},
                    "open": {"sdtype": "boolean"},
                },
            },
            "sales": {
                "primary_key": "sale_id",
                "columns": {
                    "sale_id": {"sdtype": "id"},
                    "store_id": {"sdtype": "id"},
                    "value": {"sdtype": "numerical"},
                    "cat": {"sdtype": "categorical"},
                },
                "foreign_keys": [{"column": "store_id", "parent_table": "store", "parent_key": "store_id"}],
            },
        }
    }
    meta_path = tmp_path / "metadata.json"
    meta_path.write_text(json.dumps(meta))
    data = tmp_path / "data"
    data.mkdir()
    (data / "store.csv").write_text(
        "store_id,size,opened,open\nS1,1.5,2020-01-02,true\nS2,abc,2021-03-04,False\nS3,,,\n"
    )
    (data / "sales.csv").write_text(
        'sale_id,store_id,value,cat\nx0,S1,10,a\nx1,S1,20,"b, quoted"\nx2,S2,30,\n'
    )
    return meta_path, data
