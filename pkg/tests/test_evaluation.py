import numpy as np
import pytest

from mpda.dataset import LabeledDataset
from mpda.errors import (
    DegenerateFoldsError,
    DimensionMismatchError,
    EmptyTrainSetError,
    LengthMismatchError,
)
from mpda.evaluation import (
    benchmark,
    cross_validate,
    dimension_sweep,
    error_rate,
    nn_classify,
    parameter_sweep,
    stratified_folds,
)


def two_gaussians(rng, n_per=30, d=4, gap=8.0):
    X = np.vstack([rng.normal(0, 1, size=(n_per, d)), rng.normal(gap, 1, size=(n_per, d))])
    y = np.array([1] * n_per + [2] * n_per)
    return LabeledDataset(X, y)


def test_nn_exact_match_wins():
    train = np.array([[0.0, 0.0], [5.0, 5.0]])
    labels = np.array([1, 2])
    pred = nn_classify(train, labels, np.array([[5.0, 5.0]]))
    assert pred[0] == 2


def test_nn_tie_prefers_lower_index():
    train = np.array([[0.0], [2.0]])
    labels = np.array([7, 9])
    pred = nn_classify(train, labels, np.array([[1.0]]))
    assert pred[0] == 7


def test_nn_matches_brute_force_scan(rng):
    train = rng.normal(size=(40, 3))
    labels = rng.integers(1, 4, size=40)
    test = rng.normal(size=(20, 3))
    pred = nn_classify(train, labels, test)
    for i in range(20):
        dists = [np.linalg.norm(test[i] - train[j]) for j in range(40)]
        assert pred[i] == labels[int(np.argmin(dists))]


def test_nn_errors():
    with pytest.raises(EmptyTrainSetError):
        nn_classify(np.zeros((0, 2)), np.zeros(0), np.zeros((1, 2)))
    with pytest.raises(DimensionMismatchError):
        nn_classify(np.zeros((2, 2)), np.array([1, 2]), np.zeros((1, 3)))


def test_error_rate_values():
    assert error_rate(np.array([1, 2, 3]), np.array([1, 2, 3])) == 0.0
    assert error_rate(np.array([1, 1]), np.array([2, 2])) == 1.0
    assert error_rate(np.array([1, 2, 3, 4]), np.array([1, 2, 3, 5])) == 0.25
    with pytest.raises(LengthMismatchError):
        error_rate(np.array([1]), np.array([1, 2]))


def test_stratified_folds_balanced(rng):
    y = np.repeat([1, 2, 3], [12, 9, 8])
    fold_of = stratified_folds(y, folds=4, seed=3)
    for c in (1, 2, 3):
        counts = np.bincount(fold_of[y == c], minlength=4)
        assert counts.max() - counts.min() <= 1
    with pytest.raises(DegenerateFoldsError):
        stratified_folds(np.array([1, 1, 1, 2]), folds=4, seed=0)


def test_cv_single_point_grid(rng):
    ds = two_gaussians(rng)
    res = cross_validate(ds, "pca", grid={}, m_grid=[2], folds=4, seed=0)
    assert res.best_params == {"m": 2}
    assert len(res.table) == 1


def test_cv_deterministic(rng):
    ds = two_gaussians(rng)
    a = cross_validate(ds, "mpda", grid={"gamma": [0.1, 1.0]}, m_grid=[1, 2], folds=4, seed=5)
    b = cross_validate(ds, "mpda", grid={"gamma": [0.1, 1.0]}, m_grid=[1, 2], folds=4, seed=5)
    assert a.best_params == b.best_params
    assert a.table == b.table


def test_cv_never_picks_failing_width(rng):
    # classes separate only along a low-variance axis: a 1-component PCA
    # keeps the useless high-variance direction and collapses the classes,
    # so validation accuracy must select m=2
    n = 40
    noise_axis = rng.normal(0, 10.0, size=(2 * n, 1))
    sep_axis = np.concatenate([rng.normal(0, 0.3, n), rng.normal(4, 0.3, n)])[:, None]
    X = np.hstack([noise_axis, sep_axis])
    y = np.array([1] * n + [2] * n)
    ds = LabeledDataset(X, y)
    res = cross_validate(ds, "pca", grid={}, m_grid=[1, 2], folds=4, seed=1)
    assert res.best_params["m"] == 2
    accs = {r["m"]: r["mean_accuracy"] for r in res.table}
    assert accs[2] > accs[1] + 0.2


def test_cv_selects_argmax_over_gamma(rng):
    ds = two_gaussians(rng)
    res = cross_validate(
        ds, "mpda", grid={"gamma": [1e-2, 1.0, 1e2]}, m_grid=[1], folds=4, seed=2
    )
    best = max(r["mean_accuracy"] for r in res.table)
    chosen = [r for r in res.table if r["params"]["gamma"] == res.best_params["gamma"]]
    assert max(r["mean_accuracy"] for r in chosen) == best


def test_benchmark_deterministic_and_parallel_invariant(rng):
    ds = two_gaussians(rng, n_per=24)
    kwargs = dict(
        splits=3, train_fraction=0.5, folds=3,
        grid={"gamma": [1.0]}, m_grid=[1, 2], seed=9, pca_mode="off",
    )
    a = benchmark(ds, "mpda", jobs=1, **kwargs)
    b = benchmark(ds, "mpda", jobs=3, **kwargs)
    assert a.per_split_errors == b.per_split_errors
    assert a.per_split_m == b.per_split_m
    assert a.mean_error == b.mean_error


def test_benchmark_fixed_params_skip_cv(rng):
    ds = two_gaussians(rng, n_per=20)
    rep = benchmark(
        ds, "mpda", splits=2, train_fraction=0.5,
        fixed_params={"gamma": 1.0, "k": 3}, fixed_m=1, seed=0, pca_mode="off",
    )
    assert rep.per_split_m == [1, 1]
    assert all(err <= 0.1 for err in rep.per_split_errors)
    assert rep.mean_m == 1.0


def test_benchmark_report_statistics(rng):
    ds = two_gaussians(rng, n_per=20)
    rep = benchmark(
        ds, "lda", splits=4, train_fraction=0.5, m_grid=[1], seed=1, pca_mode="off",
    )
    assert np.isclose(rep.mean_error, np.mean(rep.per_split_errors))
    assert np.isclose(rep.std_error, np.std(rep.per_split_errors))
    assert rep.splits == 4 and len(rep.per_split_errors) == 4
    d = rep.to_dict()
    assert d["mean_error"] == rep.mean_error
    rows = rep.csv_rows()
    assert rows[0] == ("split", "error", "m") and len(rows) == 5


def test_benchmark_wide_data_gets_pca_pass(rng):
    # 120 raw dimensions with 3 informative ones: auto mode must shrink
    n = 30
    signal = np.vstack([rng.normal(0, 1, size=(n, 3)), rng.normal(5, 1, size=(n, 3))])
    lift = rng.normal(size=(3, 120))
    X = signal @ lift + 0.01 * rng.normal(size=(2 * n, 120))
    y = np.array([1] * n + [2] * n)
    ds = LabeledDataset(X, y)
    rep = benchmark(
        ds, "lda", splits=2, train_fraction=0.5, m_grid=[1], seed=0, pca_mode="auto",
    )
    assert all(dim < 120 for dim in rep.preprocessed_dim)
    narrow = benchmark(
        two_gaussians(rng), "lda", splits=1, train_fraction=0.5, m_grid=[1], seed=0,
    )
    assert narrow.preprocessed_dim == [4]  # d <= 100 stays untouched


def test_dimension_sweep_rows_and_isometry(rng):
    ds = two_gaussians(rng, n_per=25, d=5)
    rows = dimension_sweep(ds, "pca", list(range(1, 6)), splits=2, train_fraction=0.6, seed=4)
    assert [m for m, _ in rows] == [1, 2, 3, 4, 5]
    # full-width PCA is a rotation: 1-NN accuracy equals the no-reduction baseline
    from mpda.dataset import train_test_split

    accs = []
    for s in range(2):
        tr, te = train_test_split(ds, 0.6, 4 * 1000 + s)
        pred = nn_classify(tr.features, tr.labels, te.features)
        accs.append(1.0 - error_rate(pred, te.labels))
    assert rows[-1][1] == pytest.approx(np.mean(accs), abs=1e-12)


def test_parameter_sweep_shape(rng):
    ds = two_gaussians(rng, n_per=20)
    rows = parameter_sweep(
        ds, "mpda", "gamma", [0.1, 1.0, 10.0], m=1, splits=2, train_fraction=0.5, seed=0,
    )
    assert [v for v, _ in rows] == [0.1, 1.0, 10.0]
    assert all(0.0 <= acc <= 1.0 for _, acc in rows)


def test_nn_invariant_under_rotation(rng):
    train = rng.normal(size=(30, 4))
    labels = rng.integers(1, 4, size=30)
    test = rng.normal(size=(15, 4))
    base = nn_classify(train, labels, test)
    for _ in range(5):
        Q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        assert np.array_equal(nn_classify(train @ Q, labels, test @ Q), base)
