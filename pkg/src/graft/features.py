"""Batch feature extraction: relevance-ordered low-rank embeddings.

A raw batch (K samples x M inputs) is mapped to a K x R feature matrix
whose columns are sorted by descending relevance, ready for row sampling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBatch
from .linalg import RANK_CUTOFF, as_matrix, thin_svd


class Extractor(enum.Enum):
    SVD_TOP_R = "svd"
    VARIANCE_ORDER = "variance"
    EXTERNAL = "external"


@dataclass(frozen=True)
class FeatureMatrix:
    """K x R feature values with non-increasing per-column relevance."""

    values: np.ndarray
    relevance: np.ndarray
    extractor_id: Extractor
    truncated: bool = False

    def __post_init__(self):
        if np.any(np.diff(self.relevance) > 1e-12):
            raise ValueError("relevance must be non-increasing")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def rank(self) -> int:
        return self.values.shape[1]


def extract_svd_features(A, R: int) -> FeatureMatrix:
    """Top-R left singular vectors of the batch, relevance = singular values.

    If the numerical rank of A is below R the result carries rank-many
    columns and truncated=True.
    """
    A = as_matrix(A, "A")
    K, M = A.shape
    if not 1 <= R <= min(K, M):
        raise ValueError(f"R={R} out of range for {K}x{M} batch")
    svd = thin_svd(A, R)
    s = svd.singular_values
    keep = int(np.sum(s > RANK_CUTOFF * max(s[0], np.finfo(float).tiny)))
    keep = max(keep, 1)
    truncated = keep < R
    return FeatureMatrix(
        values=svd.U[:, :keep].copy(),
        relevance=s[:keep].copy(),
        extractor_id=Extractor.SVD_TOP_R,
        truncated=truncated,
    )


def extract_variance_features(A, R: int) -> FeatureMatrix:
    """The R raw columns with largest sample variance, mean-centered.

    Relevance = the variances; ties keep the original column order.
    Raises DegenerateBatch when every column is constant.
    """
    A = as_matrix(A, "A")
    K, M = A.shape
    if not 1 <= R <= M:
        raise ValueError(f"R={R} out of range for {K}x{M} batch")
    var = A.var(axis=0)
    if np.all(var <= 0.0):
        raise DegenerateBatch("all columns have zero variance")
    order = np.argsort(-var, kind="stable")[:R]
    centered = A[:, order] - A[:, order].mean(axis=0)
    return FeatureMatrix(
        values=centered,
        relevance=var[order].copy(),
        extractor_id=Extractor.VARIANCE_ORDER,
    )


def from_embedding(Z, relevance=None) -> FeatureMatrix:
    """Wrap externally supplied embeddings (e.g. penultimate activations).

    Columns are assumed already ordered by importance; a default relevance
    of per-column energy is attached when none is given.
    """
    Z = as_matrix(Z, "Z")
    if relevance is None:
        energy = np.sum(Z * Z, axis=0)
        order = np.argsort(-energy, kind="stable")
        Z = Z[:, order]
        relevance = energy[order]
    relevance = np.asarray(relevance, dtype=np.float64)
    return FeatureMatrix(values=Z, relevance=relevance, extractor_id=Extractor.EXTERNAL)
