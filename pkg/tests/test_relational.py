import json

import numpy as np
import pandas as pd
import pytest

from relfidelity.relational import (
    ColumnMeta,
    DataError,
    Relationship,
    Schema,
    SchemaError,
    Table,
    TableMeta,
    denormalize,
    load_database,
    save_database,
    subset_database,
    validate,
)

from conftest import make_store_sales


def test_load_two_table_fixture(store_sales_files):
    db = load_database(*store_sales_files)
    assert [t.name for t in db] == ["store", "sales"]
    assert db["store"].row_count == 3
    assert validate(db).ok


def test_unparseable_numeric_cell_becomes_null_and_row_is_kept(store_sales_files):
    db = load_database(*store_sales_files)
    size = db["store"].data["size"]
    # cell-by-cell: "1.5" -> 1.5, "abc" -> null, "" -> null
    assert size.iloc[0] == 1.5
    assert np.isnan(size.iloc[1]) and np.isnan(size.iloc[2])
    assert len(size) == 3


def test_coercions(store_sales_files):
    db = load_database(*store_sales_files)
    store = db["store"].data
    assert store["opened"].iloc[0] == pd.Timestamp("2020-01-02").timestamp()
    assert np.isnan(store["opened"].iloc[2])
    assert store["open"].tolist()[:2] == [1.0, 0.0] and np.isnan(store["open"].iloc[2])
    sales = db["sales"].data
    assert sales["cat"].tolist() == ["a", "b, quoted", None]
    assert sales["value"].dtype == np.float64


def test_missing_table_file(store_sales_files):
    meta, data = store_sales_files
    (data / "sales.csv").unlink()
    with pytest.raises(DataError, match="missing table"):
        load_database(meta, data)


def test_metadata_errors(tmp_path):
    bad_type = {"tables": {"t": {"primary_key": "id", "columns": {"id": {"sdtype": "id"}, "x": {"sdtype": "text"}}}}}
    with pytest.raises(SchemaError, match="unknown sem_type"):
        Schema.from_dict(bad_type)
    no_pk = {"tables": {"t": {"primary_key": "id", "columns": {"x": {"sdtype": "numerical"}}}}}
    with pytest.raises(SchemaError, match="primary key"):
        Schema.from_dict(no_pk)
    composite = {"tables": {"t": {"primary_key": ["a", "b"], "columns": {"a": {"sdtype": "id"}}}}}
    with pytest.raises(SchemaError, match="composite"):
        Schema.from_dict(composite)
    dangling_table = {
        "tables": {
            "t": {
                "primary_key": "id",
                "columns": {"id": {"sdtype": "id"}, "p": {"sdtype": "id"}},
                "foreign_keys": [{"column": "p", "parent_table": "nope", "parent_key": "id"}],
            }
        }
    }
    with pytest.raises(SchemaError, match="undeclared"):
        Schema.from_dict(dangling_table)


def test_schema_dict_round_trip(store_sales_files):
    schema = load_database(*store_sales_files).schema
    assert Schema.from_dict(json.loads(json.dumps(schema.to_dict()))) == schema


def test_validate_reports_dangling_foreign_key():
    db = make_store_sales(sales=(("S1", 1.0, "a"), ("S9", 2.0, "a")))
    report = validate(db)
    assert [v.kind for v in report] == ["dangling foreign key"]
    assert report.violations[0].examples == ("S9",)


def test_validate_reports_duplicate_primary_key():
    db = make_store_sales()
    store = db["store"]
    dup = Table(store.meta, store.data.assign(store_id=["S1", "S1"]))
    report = validate(db.replace(store=dup))
    kinds = [v.kind for v in report]
    assert kinds.count("duplicate primary key") == 1


def test_round_trip(store_sales_files, tmp_path):
    db = load_database(*store_sales_files)
    out = tmp_path / "out"
    save_database(db, out / "metadata.json", out)
    again = load_database(out / "metadata.json", out)
    assert again.equals(db)


def test_round_trip_preserves_awkward_floats(tmp_path):
    db = make_store_sales(store_attr=(0.1 + 0.2, 1e-300))
    save_database(db, tmp_path / "m.json", tmp_path)
    assert load_database(tmp_path / "m.json", tmp_path).equals(db)


def test_denormalize_manual_join(store_sales):
    joined = denormalize(store_sales, "store", "sales")
    assert joined.row_count == 3
    assert joined.data["store__size"].tolist() == [1.0, 1.0, 2.0]
    assert "store_id" not in joined.data.columns
    assert joined.data["value"].tolist() == [10.0, 20.0, 30.0]


def test_denormalize_empty_child():
    db = make_store_sales(sales=())
    assert denormalize(db, "store", "sales").row_count == 0


def test_denormalize_errors(store_sales):
    with pytest.raises(SchemaError):
        denormalize(store_sales, "sales", "store")


def test_denormalize_ambiguous():
    parent = TableMeta("atom", "atom_id", (ColumnMeta("atom_id", "id"), ColumnMeta("charge", "numerical")))
    from relfidelity.relational import Database, ForeignKey

    bond = TableMeta(
        "bond",
        "bond_id",
        (ColumnMeta("bond_id", "id"), ColumnMeta("a1", "id"), ColumnMeta("a2", "id")),
        (ForeignKey("a1", "atom", "atom_id"), ForeignKey("a2", "atom", "atom_id")),
    )
    db = Database(
        Schema((parent, bond)),
        {
            "atom": Table(parent, pd.DataFrame({"atom_id": ["a", "b"], "charge": [0.1, 0.2]})),
            "bond": Table(bond, pd.DataFrame({"bond_id": ["x"], "a1": ["a"], "a2": ["b"]})),
        },
    )
    with pytest.raises(SchemaError, match="ambiguous"):
        denormalize(db, "atom", "bond")


def test_denormalize_keeps_every_child_row_under_integrity():
    from relfidelity.fixtures import retail_database

    db = retail_database(50, seed=4)
    assert validate(db).ok
    assert denormalize(db, "stores", "sales").row_count == db["sales"].row_count


def test_columns_must_match_metadata():
    meta = TableMeta("t", None, (ColumnMeta("x", "numerical"),))
    with pytest.raises(DataError):
        Table(meta, pd.DataFrame({"y": [1.0]}))


def test_relationship_lookup(store_sales):
    assert store_sales.schema.relationship("store", "sales") == Relationship("store", "sales", "store_id")
    assert store_sales.schema.topological_order() == ["store", "sales"]
    with pytest.raises(KeyError):
        store_sales.schema.relationship("sales", "store")


def test_subset_database_follows_descendants(store_sales):
    sub = subset_database(store_sales, "store", [1])
    assert sub["store"].data["store_id"].tolist() == ["S2"]
    assert sub["sales"].data["store_id"].tolist() == ["S2"]
    assert validate(sub).ok
