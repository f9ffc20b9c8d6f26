"""Neighbor graphs, discriminative weight matrices and graph Laplacians.

All constructions are deterministic: k-NN ties are broken by ascending
point index, which makes every downstream matrix reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .errors import AsymmetricInputError, KTooLargeError


@dataclass(frozen=True)
class NeighborLists:
    """Exact k-nearest neighbors per point, sorted by ascending distance.

    ``indices[i]`` are the k neighbors of point i (no self); ``distances``
    holds the matching Euclidean distances.
    """

    indices: np.ndarray  # (n, k) int
    distances: np.ndarray  # (n, k) float
    k: int

    @property
    def n(self) -> int:
        return self.indices.shape[0]

    def contains(self, i: int, j: int) -> bool:
        """True when j is among the k nearest neighbors of i."""
        return bool(np.any(self.indices[i] == j))


def pairwise_euclidean(X: np.ndarray) -> np.ndarray:
    """Dense symmetric matrix of Euclidean distances with an exact zero diagonal."""
    D = cdist(X, X)
    np.fill_diagonal(D, 0.0)
    return D


def knn_neighbors(X: np.ndarray, k: int) -> NeighborLists:
    """Exact k nearest neighbors of every row of X by Euclidean distance.

    Ties are broken by ascending point index so the result does not depend
    on search order.  Raises ``KTooLargeError`` unless 1 <= k < n.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k >= n:
        raise KTooLargeError(f"k={k} must be smaller than the number of points n={n}")
    D = pairwise_euclidean(X)
    np.fill_diagonal(D, np.inf)
    # stable sort keeps equal distances in ascending-index order
    order = np.argsort(D, axis=1, kind="stable")[:, :k]
    dists = np.take_along_axis(D, order, axis=1)
    return NeighborLists(indices=order, distances=dists, k=k)


def _mutual_edge_mask(nb: NeighborLists) -> sp.csr_matrix:
    """Boolean adjacency: edge iff i in N_k(j) or j in N_k(i)."""
    n = nb.n
    rows = np.repeat(np.arange(n), nb.k)
    cols = nb.indices.ravel()
    A = sp.csr_matrix((np.ones(rows.size, dtype=bool), (rows, cols)), shape=(n, n))
    A = (A + A.T).astype(bool)
    return A.tocsr()


def within_class_graph(nb: NeighborLists, labels: np.ndarray) -> sp.csr_matrix:
    """Binary graph linking neighbor pairs that share a class label.

    W_ij = 1 iff (i in N_k(j) or j in N_k(i)) and y_i = y_j; symmetric,
    zero diagonal, stored sparse.
    """
    labels = np.asarray(labels)
    if labels.shape[0] != nb.n:
        raise ValueError("labels length must match the neighbor structure")
    A = _mutual_edge_mask(nb).tocoo()
    keep = labels[A.row] == labels[A.col]
    W = sp.csr_matrix(
        (np.ones(int(keep.sum())), (A.row[keep], A.col[keep])), shape=(nb.n, nb.n)
    )
    W.setdiag(0.0)
    W.eliminate_zeros()
    return W


def _effective_sigma(nb: NeighborLists) -> np.ndarray:
    """Local scale sigma_i = distance to the k-th nearest neighbor.

    Duplicate points can make sigma_i = 0; it is then replaced by the
    smallest positive neighbor distance of i, or left at 0 when every
    neighbor coincides with i (the kernel limit handles those pairs).
    """
    sigma = nb.distances[:, -1].copy()
    for i in np.flatnonzero(sigma == 0):
        positive = nb.distances[i][nb.distances[i] > 0]
        sigma[i] = positive.min() if positive.size else 0.0
    return sigma


def between_class_graph(X: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Dense graph pulling apart nearby points from different classes.

    Cross-class pairs get weight 1/n.  A same-class pair in class c gets
    A_ij * (1/n - 1/n_c), where A_ij is a locally scaled heat kernel that
    is nonzero only for neighbor pairs.  Note 1/n - 1/n_c <= 0, so
    same-class entries are nonpositive.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    n = X.shape[0]
    nb = knn_neighbors(X, k)
    sigma = _effective_sigma(nb)

    same = labels[:, None] == labels[None, :]
    uniq, counts = np.unique(labels, return_counts=True)
    n_c = dict(zip(uniq, counts))
    class_size = np.array([n_c[y] for y in labels], dtype=np.float64)

    W = np.full((n, n), 1.0 / n)
    W[same] = 0.0

    D = pairwise_euclidean(X)
    mask = _mutual_edge_mask(nb).toarray()
    scale = np.outer(sigma, sigma)
    A = np.zeros((n, n))
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = np.exp(-(D**2) / scale)
    kernel[(scale == 0) & (D > 0)] = 0.0  # vanished scale, genuine distance
    kernel[D == 0] = 1.0  # coincident points: kernel limit
    A[mask & same] = kernel[mask & same]

    coeff = (1.0 / n) - (1.0 / class_size)  # per-row class term
    W += A * same * coeff[None, :]
    np.fill_diagonal(W, 0.0)
    return W


def lda_graphs(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Global between/within weight pair reproducing classical scatter matrices.

    W^w_ij = 1/n_c for same-class pairs, else 0; W^b_ij = 1/n - 1/n_c for
    same-class pairs and 1/n otherwise.  Diagonals are zeroed.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n == 0:
        raise ValueError("labels must be nonempty")
    same = labels[:, None] == labels[None, :]
    uniq, counts = np.unique(labels, return_counts=True)
    n_c = dict(zip(uniq, counts))
    class_size = np.array([n_c[y] for y in labels], dtype=np.float64)

    Ww = np.where(same, 1.0 / class_size[None, :], 0.0)
    Wb = np.where(same, 1.0 / n - 1.0 / class_size[None, :], 1.0 / n)
    np.fill_diagonal(Ww, 0.0)
    np.fill_diagonal(Wb, 0.0)
    return Wb, Ww


def laplacian(W):
    """Graph Laplacian L = D - W with D_ii = sum_{j != i} W_ij.

    Accepts a dense array or scipy sparse matrix and returns the same
    container kind.  Raises ``AsymmetricInputError`` if W is not symmetric.
    """
    if sp.issparse(W):
        diff = (W - W.T).tocoo()
        if diff.nnz and np.max(np.abs(diff.data)) > 1e-10:
            raise AsymmetricInputError("weight matrix is not symmetric")
        Wz = W.copy().tolil()
        Wz.setdiag(0.0)
        Wz = Wz.tocsr()
        deg = np.asarray(Wz.sum(axis=1)).ravel()
        return (sp.diags(deg) - Wz).tocsr()
    W = np.asarray(W, dtype=np.float64)
    if not np.allclose(W, W.T, rtol=0.0, atol=1e-10):
        raise AsymmetricInputError("weight matrix is not symmetric")
    Wz = W.copy()
    np.fill_diagonal(Wz, 0.0)
    return np.diag(Wz.sum(axis=1)) - Wz


def dump_weights_csv(W, path: str) -> None:
    """Debug dump of any weight matrix as coordinate triplets ``i,j,w``."""
    coo = sp.coo_matrix(W)
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, w in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i},{j},{w!r}\n")
