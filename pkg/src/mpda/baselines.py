"""PCA and Laplacian-formulated LDA baselines.

LDA is posed on the graph weights from ``mpda.graph.lda_graphs``: the
scatter pair (X' L^b X, X' L^w X) reproduces the classical mean-based
matrices exactly, and the projection maximizes the between/within
Rayleigh quotient by keeping the largest eigenvalues of

    (X' L^b X) t = lambda (X' L^w X + eps I) t.

The within matrix gets a small trace-scaled Tikhonov shift so singular
scatter never breaks the solve.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .dataset import LabeledDataset
from .errors import SolverFailureError
from .graph import laplacian, lda_graphs
from .model import EmbeddingModel
from .tangent import _RANK_RTOL

LDA_SHRINKAGE = 1e-6  # eps = LDA_SHRINKAGE * trace(S_w) / d


def fit_pca(
    X: np.ndarray, m: int | None = None, energy: float | None = None
) -> EmbeddingModel:
    """Principal component model with a fixed rank or an energy target.

    Exactly one of ``m`` and ``energy`` must be given.  The energy rule
    mirrors the tangent module: smallest rank reaching the requested
    eigenvalue mass, capped at the numerical rank.
    """
    if (m is None) == (energy is None):
        raise ValueError("specify exactly one of m and energy")
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least two rows")
    mean = X.mean(axis=0)
    centered = X - mean
    _, svals, Vt = np.linalg.svd(centered, full_matrices=True)
    lam = np.zeros(d)
    lam[: svals.size] = svals**2
    if energy is not None:
        total = lam.sum()
        if total <= 0:
            rank = 0
        else:
            rank = int(np.sum(lam > _RANK_RTOL * lam[0]))
        if rank == 0:
            m = 1  # degenerate data still yields a (meaningless) direction
        else:
            cumulative = np.cumsum(lam)
            m = int(np.searchsorted(cumulative, energy * total - 1e-15) + 1)
            m = min(m, rank)
    if not 0 < m <= d:
        raise ValueError(f"m must lie in 1..{d}")
    proj = Vt[:m].T
    # deterministic column signs
    lead = np.argmax(np.abs(proj), axis=0)
    signs = np.sign(proj[lead, np.arange(m)])
    signs[signs == 0] = 1.0
    proj = proj * signs
    return EmbeddingModel(
        kind="pca",
        projection=np.ascontiguousarray(proj),
        eigenvalues=lam[:m] / (n - 1),
        hyperparams={"m": int(m)} if energy is None else {"m": int(m), "energy": energy},
        mean=mean,
    )


def lda_scatter(train: LabeledDataset) -> tuple[np.ndarray, np.ndarray]:
    """Between/within scatter matrices via the graph-Laplacian route."""
    X = train.features
    Wb, Ww = lda_graphs(train.labels)
    Sb = X.T @ (laplacian(Wb) @ X)
    Sw = X.T @ (laplacian(Ww) @ X)
    return Sb, Sw


def fit_lda(train: LabeledDataset, m: int) -> EmbeddingModel:
    """Discriminant projection onto the top-m generalized eigenvectors."""
    d = train.d
    if not 0 < m <= d:
        raise ValueError(f"m must lie in 1..{d}")
    Sb, Sw = lda_scatter(train)
    eps = LDA_SHRINKAGE * max(np.trace(Sw), 1e-300) / d
    B = Sw + eps * np.eye(d)
    try:
        vals, vecs = scipy.linalg.eigh(Sb, B, subset_by_index=(d - m, d - 1))
    except scipy.linalg.LinAlgError as exc:
        raise SolverFailureError(f"LDA eigensolver failed: {exc}") from exc
    vals = vals[::-1]
    vecs = vecs[:, ::-1].copy()
    for col in range(m):
        t = vecs[:, col]
        t /= np.linalg.norm(t)
        lead = int(np.argmax(np.abs(t)))
        if t[lead] < 0:
            t = -t
        vecs[:, col] = t
    return EmbeddingModel(
        kind="lda",
        projection=np.ascontiguousarray(vecs),
        eigenvalues=vals,
        hyperparams={"m": int(m)},
    )
