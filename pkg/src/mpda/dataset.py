"""Labeled datasets: loading, reproducible splitting, basic statistics.

Split reproducibility contract
------------------------------
``train_test_split`` is pinned to the following procedure so that splits
can be regenerated by any implementation:

1. ``rng = numpy.random.default_rng(seed)`` (PCG64 bit generator).
2. Classes are visited in ascending order of their internal label
   ``1..C``.  For each class, its row indices are listed in ascending
   order and shuffled by one call to ``rng.permutation``.
3. The first ``floor(n_c * train_fraction + 0.5)`` shuffled indices go to
   the training set, the rest to the test set (rounding half up).
4. Both output datasets keep rows in ascending original-row order.

The same generator and per-class round-robin rule are reused for
cross-validation folds (see ``mpda.evaluation``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSplitError, EmptyDatasetError, ParseError


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with one integer class label per row.

    ``labels`` are contiguous in ``1..C``; ``label_names`` maps each
    internal label back to the value found in the source file.
    """

    features: np.ndarray
    labels: np.ndarray
    label_names: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise EmptyDatasetError("dataset must have at least one row and one column")
        if y.shape != (X.shape[0],):
            raise ParseError("labels must align with feature rows")
        if not np.all(np.isfinite(X)):
            raise ParseError("features contain NaN or Inf")
        # subsets of a valid dataset may lack intermediate classes, so only
        # the 1..C range is enforced here; load_dataset guarantees contiguity
        if y.min() < 1:
            raise ParseError("labels must be positive integers")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if not self.label_names:
            C = int(y.max())
            object.__setattr__(self, "label_names", {c: c for c in range(1, C + 1)})

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max())

    @property
    def class_counts(self) -> dict[int, int]:
        labels, counts = np.unique(self.labels, return_counts=True)
        return {int(c): int(k) for c, k in zip(labels, counts)}

    def class_indices(self, c: int) -> np.ndarray:
        """Row indices of class ``c``, ascending."""
        return np.flatnonzero(self.labels == c)

    def subset(self, rows: np.ndarray) -> "LabeledDataset":
        """Rows selected by index; labels keep the parent's numbering."""
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledDataset(self.features[rows], self.labels[rows], dict(self.label_names))


def _remap_labels(raw_labels: list[int]) -> tuple[np.ndarray, dict[int, int]]:
    """Map raw integer labels to contiguous 1..C by first appearance."""
    mapping: dict[int, int] = {}
    out = np.empty(len(raw_labels), dtype=np.int64)
    for i, v in enumerate(raw_labels):
        if v not in mapping:
            mapping[v] = len(mapping) + 1
        out[i] = mapping[v]
    return out, {new: old for old, new in mapping.items()}


def _parse_int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        # tolerate "1.0"-style labels as long as the value is integral
        try:
            v = float(token)
        except ValueError:
            raise ParseError(f"line {lineno}: label {token!r} is not an integer") from None
        if v != int(v):
            raise ParseError(f"line {lineno}: label {token!r} is not an integer")
        return int(v)


def _load_csv(path: str, header: bool) -> tuple[list[list[float]], list[int]]:
    rows: list[list[float]] = []
    labels: list[int] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if header and lineno == 1:
                continue
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
                if width < 2:
                    raise ParseError(f"line {lineno}: need a label and at least one feature")
            elif len(parts) != width:
                raise ParseError(
                    f"line {lineno}: expected {width} fields, found {len(parts)}"
                )
            labels.append(_parse_int(parts[0].strip(), lineno))
            try:
                rows.append([float(p) for p in parts[1:]])
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric feature value") from None
    return rows, labels


def _load_libsvm(path: str) -> tuple[list[dict[int, float]], list[int]]:
    rows: list[dict[int, float]] = []
    labels: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            labels.append(_parse_int(parts[0], lineno))
            entries: dict[int, float] = {}
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise ParseError(f"line {lineno}: bad sparse entry {tok!r}") from None
                if idx < 1:
                    raise ParseError(f"line {lineno}: indices are 1-based, got {idx}")
                entries[idx] = val
            rows.append(entries)
    return rows, labels


def load_dataset(path: str, format: str = "csv", header: bool = False) -> LabeledDataset:
    """Load a labeled dataset from ``path``.

    ``csv``: first column is the integer class label, remaining columns
    are features, no header unless ``header=True``.  ``libsvm``: standard
    ``label idx:val`` sparse lines, densified with zeros.
    """
    if format == "csv":
        rows, raw_labels = _load_csv(path, header)
        if not rows:
            raise EmptyDatasetError(f"{path}: no data rows")
        X = np.asarray(rows, dtype=np.float64)
    elif format == "libsvm":
        entries, raw_labels = _load_libsvm(path)
        if not entries:
            raise EmptyDatasetError(f"{path}: no data rows")
        d = max((max(e) for e in entries if e), default=0)
        if d == 0:
            raise ParseError(f"{path}: no feature entries found")
        X = np.zeros((len(entries), d), dtype=np.float64)
        for i, e in enumerate(entries):
            for idx, val in e.items():
                X[i, idx - 1] = val
    else:
        raise ValueError(f"unknown format {format!r}")
    labels, names = _remap_labels(raw_labels)
    return LabeledDataset(X, labels, names)


def split_indices(
    labels: np.ndarray, train_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Stratified train/test row indices per the pinned procedure above."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        n_train = int(np.floor(len(idx) * train_fraction + 0.5))
        if n_train == 0:
            raise DegenerateSplitError(
                f"class {int(c)} would have no training points at fraction {train_fraction}"
            )
        perm = rng.permutation(len(idx))
        train_parts.append(idx[perm[:n_train]])
        test_parts.append(idx[perm[n_train:]])
    train = np.sort(np.concatenate(train_parts))
    test = np.sort(np.concatenate(test_parts))
    return train, test


def train_test_split(
    ds: LabeledDataset, train_fraction: float, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Deterministic stratified split; see the module docstring for the PRNG contract."""
    train_idx, test_idx = split_indices(ds.labels, train_fraction, seed)
    if test_idx.size == 0:
        raise DegenerateSplitError("split leaves an empty test set")
    return ds.subset(train_idx), ds.subset(test_idx)
