import numpy as np
import pytest
import scipy.sparse as sp

from mpda.errors import AsymmetricInputError, KTooLargeError
from mpda.graph import (
    between_class_graph,
    knn_neighbors,
    laplacian,
    lda_graphs,
    within_class_graph,
)


def brute_force_knn(X, k):
    """Oracle: full pairwise sort with explicit (distance, index) keys."""
    n = len(X)
    out = np.zeros((n, k), dtype=int)
    for i in range(n):
        cand = sorted(
            (float(np.linalg.norm(X[i] - X[j])), j) for j in range(n) if j != i
        )
        out[i] = [j for _, j in cand[:k]]
    return out


def test_knn_on_a_line():
    X = np.array([[0.0], [1.0], [3.0]])
    nb = knn_neighbors(X, 1)
    assert list(nb.indices.ravel()) == [1, 0, 1]


def test_knn_k_too_large():
    X = np.zeros((4, 2))
    with pytest.raises(KTooLargeError):
        knn_neighbors(X, 4)


def test_knn_matches_brute_force(rng):
    X = rng.normal(size=(50, 5))
    nb = knn_neighbors(X, 4)
    assert np.array_equal(nb.indices, brute_force_knn(X, 4))
    # distances sorted ascending and nonnegative
    assert np.all(np.diff(nb.distances, axis=1) >= 0)
    assert np.all(nb.distances >= 0)


def test_knn_tie_break_by_index():
    # points 1 and 2 both at distance 1 from point 0
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    nb = knn_neighbors(X, 1)
    assert nb.indices[0, 0] == 1


def test_within_graph_rules():
    X = np.array([[0.0], [0.5], [10.0], [10.5]])
    y = np.array([1, 1, 1, 2])
    W = within_class_graph(knn_neighbors(X, 1), y).toarray()
    assert W[0, 1] == 1.0 and W[1, 0] == 1.0  # mutual same-class neighbors
    assert W[2, 3] == 0.0 and W[3, 2] == 0.0  # nearest but different classes
    assert np.array_equal(W, W.T) and np.all(np.diag(W) == 0)


def test_within_graph_matches_exhaustive_predicate(rng):
    X = rng.normal(size=(20, 3))
    y = rng.integers(1, 3, size=20)
    k = 3
    nb = knn_neighbors(X, k)
    W = within_class_graph(nb, y).toarray()
    idx = brute_force_knn(X, k)
    expect = np.zeros((20, 20))
    for i in range(20):
        for j in range(20):
            if i == j or y[i] != y[j]:
                continue
            if j in idx[i] or i in idx[j]:
                expect[i, j] = 1.0
    assert np.array_equal(W, expect)


def test_between_graph_cross_class_value():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(10, 2))
    y = np.array([1] * 5 + [2] * 5)
    W = between_class_graph(X, y, k=2)
    cross = ~(y[:, None] == y[None, :])
    assert np.allclose(W[cross], 0.1)


def test_between_graph_same_class_nonneighbors_zero():
    # two same-class points far apart, never in each other's k-NN
    X = np.vstack([
        [[0.0, 0.0], [0.1, 0.0], [50.0, 0.0], [50.1, 0.0]],
        np.random.default_rng(1).normal(100, 0.1, size=(4, 2)),
    ])
    y = np.array([1, 1, 1, 1, 2, 2, 2, 2])
    W = between_class_graph(X, y, k=1)
    assert W[0, 2] == 0.0 and W[0, 3] == 0.0


def test_between_graph_kernel_value_at_sigma():
    # same-class neighbor pair at exactly sigma_i = sigma_j = ||xi - xj||
    rng = np.random.default_rng(5)
    X = np.vstack([[[0.0, 0.0], [1.0, 0.0]], rng.normal(8, 0.5, size=(8, 2))])
    y = np.array([1, 1] + [2] * 8)
    W = between_class_graph(X, y, k=1)
    n, n_c = 10, 2
    assert np.isclose(W[0, 1], np.exp(-1.0) * (1 / n - 1 / n_c))


def test_between_graph_same_class_range(rng):
    X = rng.normal(size=(24, 4))
    y = rng.integers(1, 4, size=24)
    y[:3] = [1, 2, 3]
    W = between_class_graph(X, y, k=3)
    assert np.allclose(W, W.T) and np.all(np.diag(W) == 0)
    n = 24
    for c in np.unique(y):
        n_c = int(np.sum(y == c))
        block = W[np.ix_(y == c, y == c)]
        lo = 1 / n - 1 / n_c
        assert np.all(block >= lo - 1e-15) and np.all(block <= 0.0)


def test_between_graph_duplicate_points():
    # coincident same-class points: kernel limit gives weight 1
    X = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 0.0], [5.0, 1.0]])
    y = np.array([1, 1, 2, 2])
    W = between_class_graph(X, y, k=1)
    assert np.isclose(W[0, 1], 1.0 * (1 / 4 - 1 / 2))
    assert np.isfinite(W).all()


def test_lda_graphs_values():
    y = np.array([1, 1, 2, 2])
    Wb, Ww = lda_graphs(y)
    assert Ww[0, 1] == 0.5 and Ww[0, 2] == 0.0
    assert Wb[0, 2] == 0.25 and np.isclose(Wb[0, 1], 0.25 - 0.5)
    assert np.all(np.diag(Wb) == 0) and np.all(np.diag(Ww) == 0)


def test_laplacian_two_node_chain():
    L = laplacian(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.array_equal(L, [[1.0, -1.0], [-1.0, 1.0]])


def test_laplacian_zero_graph():
    assert np.all(laplacian(np.zeros((3, 3))) == 0)


def test_laplacian_quadratic_form_identity(rng):
    # x' L x == 1/2 sum_ij W_ij (x_i - x_j)^2
    W = rng.uniform(0, 1, size=(8, 8))
    W = (W + W.T) / 2
    np.fill_diagonal(W, 0.0)
    L = laplacian(W)
    for _ in range(100):
        x = rng.normal(size=8)
        direct = 0.5 * np.sum(W * (x[:, None] - x[None, :]) ** 2)
        assert np.isclose(x @ L @ x, direct, rtol=1e-12)


def test_laplacian_sparse_matches_dense(rng):
    W = rng.uniform(0, 1, size=(6, 6))
    W = (W + W.T) / 2
    np.fill_diagonal(W, 0.0)
    Ls = laplacian(sp.csr_matrix(W))
    assert np.allclose(Ls.toarray(), laplacian(W))


def test_laplacian_rejects_asymmetric():
    with pytest.raises(AsymmetricInputError):
        laplacian(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_laplacian_psd_and_null_vector(rng):
    for _ in range(10):
        n = int(rng.integers(3, 12))
        W = rng.uniform(0, 2, size=(n, n))
        W = (W + W.T) / 2
        np.fill_diagonal(W, 0.0)
        L = laplacian(W)
        assert np.max(np.abs(L @ np.ones(n))) < 1e-12
        assert np.linalg.eigvalsh(L).min() >= -1e-10
