import numpy as np
import pytest

from mpda.dataset import LabeledDataset


def random_labeled(rng, n_max=40, d_max=8, c_max=3, min_per_class=3):
    """Random dataset where every class has at least ``min_per_class`` rows."""
    n = int(rng.integers(c_max * min_per_class, n_max + 1))
    d = int(rng.integers(2, d_max + 1))
    C = int(rng.integers(2, c_max + 1))
    X = rng.normal(size=(n, d))
    while True:
        y = rng.integers(1, C + 1, size=n)
        if all(np.sum(y == c) >= min_per_class for c in range(1, C + 1)):
            break
    return LabeledDataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
