"""Dataset container, synthetic generators, and CSV loading.

CSV files need a header row with a ``label`` column; every other column
is a numeric feature.  Two generators cover the synthetic experiments:
``two_gaussians`` (binary classification with controllable separation)
and ``low_rank_classes`` (balanced classes living on low-rank subspaces).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    train_idx: np.ndarray
    test_idx: np.ndarray

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def train(self):
        return self.features[self.train_idx], self.labels[self.train_idx]

    def test(self):
        return self.features[self.test_idx], self.labels[self.test_idx]


def _split(n: int, test_fraction: float, rng: np.random.Generator):
    perm = rng.permutation(n)
    n_test = int(round(test_fraction * n))
    return perm[n_test:], perm[:n_test]


def two_gaussians(
    n: int = 2000,
    d: int = 20,
    separation: float = 3.0,
    seed: int = 0,
    test_fraction: float = 0.25,
) -> Dataset:
    """Two isotropic Gaussian blobs separated by ``separation`` sigmas."""
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)
    labels = rng.integers(0, 2, size=n)
    signs = 2.0 * labels - 1.0
    X = rng.normal(size=(n, d)) + np.outer(signs * separation / 2.0, direction)
    train_idx, test_idx = _split(n, test_fraction, rng)
    return Dataset(X, labels.astype(int), 2, train_idx, test_idx)


def low_rank_classes(
    n: int = 1500,
    d: int = 30,
    n_classes: int = 3,
    rank: int = 4,
    noise: float = 0.1,
    seed: int = 0,
    test_fraction: float = 0.25,
) -> Dataset:
    """Balanced classes, each drawn from its own ``rank``-dimensional subspace."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_classes), n // n_classes)
    labels = np.concatenate([labels, rng.integers(0, n_classes, size=n - len(labels))])
    rng.shuffle(labels)
    X = np.empty((n, d))
    for c in range(n_classes):
        basis = rng.normal(size=(rank, d))
        center = rng.normal(scale=2.0, size=d)
        mask = labels == c
        coeff = rng.normal(size=(int(mask.sum()), rank))
        X[mask] = center + coeff @ basis + noise * rng.normal(size=(int(mask.sum()), d))
    train_idx, test_idx = _split(n, test_fraction, rng)
    return Dataset(X, labels.astype(int), n_classes, train_idx, test_idx)


def load_csv(path, test_fraction: float = 0.25, seed: int = 0) -> Dataset:
    """Load a dataset from CSV with a header row and a ``label`` column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if "label" not in header:
            raise ValueError(f"{path}: header has no 'label' column")
        label_col = header.index("label")
        feats, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                vals = [float(x) for x in row]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric value") from None
            labels.append(vals.pop(label_col))
            feats.append(vals)
    X = np.asarray(feats)
    y = np.asarray(labels)
    if np.allclose(y, np.round(y)):
        y = y.astype(int)
        class_count = int(y.max()) + 1 if len(y) else 0
    else:
        class_count = 0  # regression targets
    rng = np.random.default_rng(seed)
    train_idx, test_idx = _split(len(y), test_fraction, rng)
    return Dataset(X, y, class_count, train_idx, test_idx)


def iris(test_fraction: float = 0.25, seed: int = 0) -> Dataset:
    """The bundled 150x4, 3-class iris table."""
    path = resources.files("graft.data").joinpath("iris.csv")
    with resources.as_file(path) as p:
        return load_csv(p, test_fraction=test_fraction, seed=seed)


def iris_matrix() -> np.ndarray:
    """Raw 150x4 iris feature matrix (no split, no labels)."""
    return iris(test_fraction=0.0).features


BUILTIN_GENERATORS = {
    "two_gaussians": two_gaussians,
    "low_rank_classes": low_rank_classes,
    "iris": iris,
}
