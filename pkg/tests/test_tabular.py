"""Tests for table loading, validation and correlations."""

import numpy as np
import pytest

from causal_agent.tabular import DataTable, TableError, correlation_matrix, from_columns, load_csv, write_csv


def write(tmp_path, text, name="t.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_csv_keeps_header_order(tmp_path):
    table = load_csv(write(tmp_path, "b,a,c\n1,2,3\n4,5,6.5\n"))
    assert table.name == "t.csv"
    assert table.columns == ("b", "a", "c")
    assert table.n == 2 and table.c == 3
    np.testing.assert_allclose(table.column("c"), [3.0, 6.5])


def test_load_csv_accepts_scientific_notation(tmp_path):
    table = load_csv(write(tmp_path, "x,y\n1e-3,-2.5E2\n0,1\n"))
    np.testing.assert_allclose(table.column("x"), [0.001, 0.0])
    np.testing.assert_allclose(table.column("y"), [-250.0, 1.0])


def test_non_numeric_cell_reports_row_and_column(tmp_path):
    with pytest.raises(TableError, match=r"row 2, column y"):
        load_csv(write(tmp_path, "x,y\n1,2\n3,abc\n"))


@pytest.mark.parametrize(
    "text, message",
    [
        ("x,x\n1,2\n", "duplicate column name 'x'"),
        ("x,\n1,2\n", "empty column name"),
        ("x,y\n", "empty table"),
        ("x,y\n1,nan\n", "non-finite"),
    ],
)
def test_invalid_tables(tmp_path, text, message):
    with pytest.raises(TableError, match=message):
        load_csv(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(TableError, match="file not found"):
        load_csv(tmp_path / "nope.csv")


def test_write_csv_round_trips_exactly(tmp_path):
    rng = np.random.default_rng(3)
    table = DataTable("r.csv", ("a", "b"), rng.standard_normal((50, 2)))
    loaded = load_csv(write_csv(table, tmp_path / "r.csv"))
    assert loaded.columns == table.columns
    assert np.array_equal(loaded.values, table.values)


def test_table_is_read_only():
    table = from_columns("t", {"a": [1.0, 2.0], "b": [3.0, 5.0]})
    with pytest.raises(ValueError):
        table.values[0, 0] = 9.0


def test_select_and_rename():
    table = from_columns("t", {"a": [1, 2], "b": [3, 4], "c": [5, 7]})
    picked = table.select(["c", "a"])
    assert picked.columns == ("c", "a")
    np.testing.assert_allclose(picked.values[:, 0], [5, 7])
    renamed = table.rename({"a": "age"}, name="k.csv")
    assert renamed.columns == ("age", "b", "c")
    assert renamed.name == "k.csv"
    with pytest.raises(TableError, match="unknown variable 'zz'"):
        table.select(["zz"])


def test_correlation_matches_numpy():
    rng = np.random.default_rng(0)
    values = rng.standard_normal((200, 3))
    values[:, 1] += values[:, 0]
    table = DataTable("t", ("a", "b", "c"), values)
    corr = correlation_matrix(table)
    np.testing.assert_allclose(corr.values, np.corrcoef(values, rowvar=False), atol=1e-12)
    assert corr.get("a", "a") == 1.0
    assert corr.get("a", "b") == corr.get("b", "a")


def test_constant_column_has_no_correlation():
    table = from_columns("t", {"a": [1, 2, 3], "b": [4, 4, 4]})
    with pytest.raises(TableError, match="zero variance"):
        correlation_matrix(table)
