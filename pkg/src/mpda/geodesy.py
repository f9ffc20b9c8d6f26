"""Geodesic distances on neighbor graphs and patch linearity scores.

Geodesics are approximated by exact shortest paths on the undirected
k'-NN graph with Euclidean edge lengths.  The linearity of a point set is
the mean ratio of geodesic to straight-line distance over all its pairs
(1 means the set lies along a straight path, larger means more tortuous).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import UnreachablePairError
from .graph import NeighborLists, knn_neighbors, pairwise_euclidean


@dataclass(frozen=True)
class GeodesicMatrix:
    """Shortest-path lengths paired with the companion Euclidean distances.

    ``geodesic[i, j]`` is +inf when j cannot be reached from i in the
    neighbor graph.
    """

    geodesic: np.ndarray
    euclidean: np.ndarray

    @property
    def n(self) -> int:
        return self.geodesic.shape[0]


def neighbor_graph_matrix(nb: NeighborLists) -> sp.csr_matrix:
    """Sparse undirected edge-length matrix of the k-NN graph.

    Zero-length edges (coincident points) are kept as explicit zeros so
    shortest-path routines treat them as traversable.
    """
    n = nb.n
    rows = np.repeat(np.arange(n), nb.k)
    cols = nb.indices.ravel()
    vals = nb.distances.ravel()
    both = sp.coo_matrix(
        (np.concatenate([vals, vals]), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    )
    # duplicate entries would be summed by csr conversion; rebuild explicitly
    seen = {}
    for i, j, w in zip(both.row, both.col, both.data):
        seen[(int(i), int(j))] = float(w)
    if not seen:
        return sp.csr_matrix((n, n))
    ii, jj = zip(*seen.keys())
    return sp.csr_matrix((list(seen.values()), (ii, jj)), shape=(n, n))


def geodesic_distances(X: np.ndarray, nb: NeighborLists | None = None, k: int | None = None) -> GeodesicMatrix:
    """All-pairs shortest paths on the k-NN graph of X, plus Euclidean distances.

    Provide either a prebuilt neighbor structure or a neighbor count k.
    Unreachable pairs are +inf, which is data for the partitioner, not an
    error.
    """
    X = np.asarray(X, dtype=np.float64)
    if nb is None:
        if k is None:
            raise ValueError("provide either neighbor lists or k")
        nb = knn_neighbors(X, k)
    G = neighbor_graph_matrix(nb)
    DG = dijkstra(G, directed=False)
    DE = pairwise_euclidean(X)
    return GeodesicMatrix(geodesic=DG, euclidean=DE)


def graph_components(nb: NeighborLists) -> np.ndarray:
    """Connected-component label per point of the undirected k-NN graph."""
    G = neighbor_graph_matrix(nb)
    _, comp = connected_components(G, directed=False)
    return comp


def pair_tortuosity(dist: GeodesicMatrix, members: np.ndarray) -> np.ndarray:
    """Matrix of geodesic/Euclidean ratios for one point set.

    The diagonal is defined as 1 (straight-line limit) and coincident
    distinct points also score 1, since a zero-length path is trivially
    straight.  Raises ``UnreachablePairError`` on infinite geodesics.
    """
    members = np.asarray(members, dtype=np.int64)
    DG = dist.geodesic[np.ix_(members, members)]
    DE = dist.euclidean[np.ix_(members, members)]
    if np.any(np.isinf(DG)):
        raise UnreachablePairError("patch contains mutually unreachable points")
    R = np.ones_like(DG)
    off = ~np.eye(len(members), dtype=bool)
    positive = off & (DE > 0)
    R[positive] = DG[positive] / DE[positive]
    return R


def patch_linearity(members: np.ndarray, dist: GeodesicMatrix) -> float:
    """Mean tortuosity of a point set: (1/N^2) * sum of all pairwise ratios."""
    members = np.asarray(members, dtype=np.int64)
    if members.size == 0:
        raise ValueError("patch must contain at least one point")
    R = pair_tortuosity(dist, members)
    return float(R.sum() / (len(members) ** 2))
