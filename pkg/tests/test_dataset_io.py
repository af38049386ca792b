import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scalebench.dataset_io import (
    Dataset,
    DatasetError,
    Task,
    clean_dataset,
    encode_labels,
    load_csv,
    sanitize_name,
    save_split,
    split_train_test,
)

from conftest import write_text


def _ds(n=10, d=2, task=Task.REGRESSION):
    X = np.arange(n * d, dtype=float).reshape(n, d)
    return Dataset("toy", tuple(f"f{j}" for j in range(d)), X, np.arange(n, dtype=float), task)


def test_load_basic(tmp_path):
    p = write_text(tmp_path / "t.csv", "a,b,target\n1,2,0.5\n3,4,1.5\n5,6,2.5\n7,8,3.5\n")
    ds = load_csv(p, "target", Task.REGRESSION)
    assert (ds.n, ds.d) == (4, 2)
    assert ds.feature_names == ("a", "b")
    assert np.array_equal(ds.y, [0.5, 1.5, 2.5, 3.5])
    assert np.array_equal(ds.X[:, 0], [1, 3, 5, 7])


def test_target_may_sit_in_any_column(tmp_path):
    p = write_text(tmp_path / "t.csv", "target,a\nA,1\nB,2\n")
    ds = load_csv(p, "target", Task.CLASSIFICATION)
    assert ds.feature_names == ("a",)
    assert ds.X[:, 0].tolist() == [1.0, 2.0]


def test_labels_first_occurrence(tmp_path):
    p = write_text(tmp_path / "t.csv", "x,label\n1,B\n2,A\n3,B\n4,A\n")
    ds = load_csv(p, "label", Task.CLASSIFICATION)
    assert ds.y.tolist() == [0, 1, 0, 1]
    assert ds.classes == ("B", "A")
    assert ds.n_classes == 2


def test_encode_labels_merges_int_and_float_spellings():
    codes, classes = encode_labels([1, 1.0, 2, "x"])
    assert codes.tolist() == [0, 0, 1, 2]
    assert classes == ("1", "2", "x")


def test_blank_cell_message(tmp_path):
    p = write_text(tmp_path / "t.csv", "a,b,target\n1,2,0\n3,,1\n")
    with pytest.raises(DatasetError, match=r"missing value at row 2, column b"):
        load_csv(p, "target", Task.REGRESSION)


@pytest.mark.parametrize(
    "content, match",
    [
        ("a,b\n1,2\n", "target column"),
        ("a,target\n", "no data rows"),
        ("", "empty"),
        ("a,target\nfoo,1\n", "non-numeric"),
        ("a,target\n1,2,3\n", "fields"),
    ],
)
def test_load_errors(tmp_path, content, match):
    p = write_text(tmp_path / "t.csv", content)
    with pytest.raises(DatasetError, match=match):
        load_csv(p, "target", Task.REGRESSION)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv", "target", Task.REGRESSION)


def test_sentinels_become_missing_and_are_dropped(tmp_path, caplog):
    p = write_text(tmp_path / "t.csv", "a,b,target\n1,-200,0\n2,3,1\n4,5,2\n")
    raw = load_csv(p, "target", Task.REGRESSION, missing_sentinels=(-200,))
    assert math.isnan(raw.X[0, 1])
    with caplog.at_level(logging.INFO, logger="scalebench.dataset_io"):
        ds = clean_dataset(raw)
    assert ds.n == 2 and ds.dropped_rows == 1
    assert "dropped 1 row" in caplog.text
    # without the sentinel list the value is a regular number
    assert load_csv(p, "target", Task.REGRESSION).X[0, 1] == -200.0


def test_sanitize_name_examples():
    assert sanitize_name("Area (mm^2)") == "area_mm_2"
    assert sanitize_name("  Rel. Humidity ") == "rel_humidity"
    assert sanitize_name("Sensor-Noise") == "sensor_noise"


def test_clean_renames_and_encodes():
    raw = Dataset(
        "My Data", ("Area (mm^2)", "Perimeter"), np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]),
        np.array([0, 1, 0]), Task.CLASSIFICATION, classes=("Cammeo", "Osmancik"),
    )
    ds = clean_dataset(raw)
    assert ds.feature_names == ("area_mm_2", "perimeter")
    assert ds.name == "my_data"
    assert ds.y.tolist() == [0, 1, 0]
    assert ds.classes == ("Cammeo", "Osmancik")


def test_clean_drops_nan_row_and_reencodes_contiguously():
    X = np.array([[1.0], [np.nan], [3.0]])
    raw = Dataset("d", ("x",), X, np.array([0, 1, 2]), Task.CLASSIFICATION, classes=("a", "b", "c"))
    ds = clean_dataset(raw)
    assert ds.n == 2
    assert ds.y.tolist() == [0, 1]
    assert ds.classes == ("a", "c")


def test_clean_errors():
    dup = Dataset("d", ("A b", "a-b"), np.ones((3, 2)), np.zeros(3), Task.REGRESSION)
    with pytest.raises(DatasetError, match="duplicate"):
        clean_dataset(dup)
    allnan = Dataset("d", ("x",), np.full((3, 1), np.nan), np.zeros(3), Task.REGRESSION)
    with pytest.raises(DatasetError, match="every row"):
        clean_dataset(allnan)


def test_clean_idempotent(fixtures_dir):
    raw = load_csv(fixtures_dir / "rice_like.csv", "Class", Task.CLASSIFICATION)
    once = clean_dataset(raw)
    twice = clean_dataset(once)
    assert once.feature_names == twice.feature_names
    assert np.array_equal(once.X, twice.X) and np.array_equal(once.y, twice.y)
    assert once.classes == twice.classes and once.name == twice.name


def test_split_sizes_and_determinism():
    ds = _ds(10)
    s1 = split_train_test(ds, 0.7, 5)
    s2 = split_train_test(ds, 0.7, 5)
    assert (s1.train.n, s1.test.n) == (7, 3)
    assert np.array_equal(s1.train_index, s2.train_index)
    assert np.array_equal(s1.train.X, ds.X[s1.train_index])
    s3 = split_train_test(ds, 0.7, 6)
    assert not np.array_equal(np.r_[s1.train_index, s1.test_index], np.r_[s3.train_index, s3.test_index])


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 80), ratio=st.floats(0.05, 0.95), seed=st.integers(0, 2**63))
def test_split_partition_property(n, ratio, seed):
    k = round(ratio * n)
    if k < 1 or k > n - 1:
        with pytest.raises(ValueError):
            split_train_test(_ds(n), ratio, seed)
        return
    s = split_train_test(_ds(n), ratio, seed)
    tr, te = set(s.train_index.tolist()), set(s.test_index.tolist())
    assert not tr & te
    assert tr | te == set(range(n))
    assert len(tr) == k


@pytest.mark.parametrize("ratio", [0.0, 1.0, -0.1, 1.5])
def test_split_bad_ratio(ratio):
    with pytest.raises(ValueError):
        split_train_test(_ds(10), ratio, 0)


def test_save_split_roundtrip(tmp_path):
    ds = _ds(10)
    s = split_train_test(ds, 0.7, 1)
    tr, te = save_split(s, tmp_path)
    assert tr.name == "toy_train.csv" and te.name == "toy_test.csv"
    back = load_csv(tr, "target", Task.REGRESSION)
    assert np.array_equal(back.X, s.train.X)
    assert np.array_equal(back.y, s.train.y)
