import numpy as np
import pytest

from mpda.dataset import LabeledDataset, load_dataset, split_indices, train_test_split
from mpda.errors import DegenerateSplitError, EmptyDatasetError, ParseError


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_csv_basic(tmp_path):
    path = write(tmp_path, "1,0,0,0\n1,1,0,0\n2,0,1,0\n")
    ds = load_dataset(path)
    assert ds.n == 3 and ds.d == 3 and ds.n_classes == 2
    assert ds.class_counts == {1: 2, 2: 1}


def test_load_csv_label_remap_first_appearance(tmp_path):
    path = write(tmp_path, "7,1.5\n3,2.5\n7,3.5\n")
    ds = load_dataset(path)
    assert list(ds.labels) == [1, 2, 1]
    assert ds.label_names == {1: 7, 2: 3}


def test_load_csv_ragged_row_rejected(tmp_path):
    path = write(tmp_path, "1,0,0,0\n1,2\n2,0,1,0\n")
    with pytest.raises(ParseError):
        load_dataset(path)


def test_load_csv_non_numeric_rejected(tmp_path):
    path = write(tmp_path, "1,0,zero\n")
    with pytest.raises(ParseError):
        load_dataset(path)


def test_load_csv_empty_rejected(tmp_path):
    path = write(tmp_path, "")
    with pytest.raises(EmptyDatasetError):
        load_dataset(path)


def test_load_csv_header_flag(tmp_path):
    path = write(tmp_path, "label,f1\n1,0.5\n2,1.5\n")
    ds = load_dataset(path, header=True)
    assert ds.n == 2 and ds.d == 1


def test_load_libsvm(tmp_path):
    path = write(tmp_path, "1 1:0.5 3:2.0\n2 2:1.0\n", name="data.svm")
    ds = load_dataset(path, format="libsvm")
    assert ds.n == 2 and ds.d == 3
    assert np.allclose(ds.features, [[0.5, 0.0, 2.0], [0.0, 1.0, 0.0]])


def test_load_rejects_nan(tmp_path):
    path = write(tmp_path, "1,nan\n2,1.0\n")
    with pytest.raises(ParseError):
        load_dataset(path)


def test_split_matches_documented_permutation_oracle():
    # oracle: one PCG64 permutation per class, classes ascending, first
    # floor(n_c * fraction + 0.5) shuffled members go to train
    y = np.array([1, 1, 1, 1])
    X = np.arange(8.0).reshape(4, 2)
    ds = LabeledDataset(X, y)
    seed = 7
    perm = np.random.default_rng(seed).permutation(4)
    expected_train = np.sort(perm[:2])
    train_idx, test_idx = split_indices(ds.labels, 0.5, seed)
    assert np.array_equal(train_idx, expected_train)
    assert np.array_equal(np.sort(np.concatenate([train_idx, test_idx])), np.arange(4))


def test_split_deterministic(rng):
    X = rng.normal(size=(30, 3))
    y = np.array([1] * 10 + [2] * 10 + [3] * 10)
    ds = LabeledDataset(X, y)
    a = split_indices(ds.labels, 0.4, seed=123)
    b = split_indices(ds.labels, 0.4, seed=123)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    c = split_indices(ds.labels, 0.4, seed=124)
    assert not np.array_equal(a[0], c[0])


def test_split_is_stratified(rng):
    for trial in range(10):
        counts = rng.integers(4, 30, size=3)
        y = np.concatenate([np.full(k, c + 1) for c, k in enumerate(counts)])
        X = rng.normal(size=(len(y), 2))
        ds = LabeledDataset(X, y)
        frac = float(rng.uniform(0.2, 0.8))
        tr, te = train_test_split(ds, frac, seed=int(rng.integers(1e6)))
        for c, n_c in enumerate(counts, start=1):
            got = int(np.sum(tr.labels == c))
            assert abs(got - n_c * frac) < 1.0
            assert got + int(np.sum(te.labels == c)) == n_c


def test_split_counts_quarter_fraction():
    # 1440 rows in 20 equal classes at fraction 0.25 -> 360/1080
    y = np.repeat(np.arange(1, 21), 72)
    X = np.zeros((1440, 2))
    X[:, 0] = np.arange(1440)
    ds = LabeledDataset(X, y)
    tr, te = train_test_split(ds, 0.25, seed=0)
    assert tr.n == 360 and te.n == 1080


def test_split_degenerate_class_raises():
    ds = LabeledDataset(np.zeros((5, 2)), np.array([1, 1, 1, 1, 2]))
    with pytest.raises(DegenerateSplitError):
        train_test_split(ds, 0.1, seed=0)  # class 2 would round to zero


def test_subset_keeps_label_space():
    ds = LabeledDataset(np.arange(12.0).reshape(6, 2), np.array([1, 1, 2, 2, 3, 3]))
    sub = ds.subset(np.array([0, 4, 5]))
    assert list(sub.labels) == [1, 3, 3]
