"""Principal component projection and median binarization."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFinite, RankDeficient

SIGN_CONVENTION = "max-abs-positive"


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (k, d), orthonormal rows
    eigenvalues: np.ndarray  # (k,), non-increasing

    @property
    def k(self) -> int:
        return int(self.components.shape[0])

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for arr in (self.mean, self.components, self.eigenvalues):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        h.update(SIGN_CONVENTION.encode())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class ReducedDataset:
    features: np.ndarray  # (n, k)
    labels: np.ndarray  # (n,)
    model_fingerprint: str = ""

    def __len__(self):
        return int(self.labels.shape[0])


@dataclass(frozen=True)
class BinaryDataset:
    bits: np.ndarray  # (n, k) of 0.0 / 1.0
    thresholds: np.ndarray  # (k,)
    labels: np.ndarray

    def __len__(self):
        return int(self.labels.shape[0])


def fit_pca(X, k: int = 4) -> PcaModel:
    """Top-``k`` eigenvectors of the sample covariance of ``X``.

    The covariance uses the unbiased (n - 1) normalization, so the eigenvalues equal
    the per-column variances of the projected training data. Each component is
    sign-fixed so that its largest-magnitude entry (the first one, on ties) is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if not 1 <= k <= d or n < max(k, 2):
        raise ValueError(f"need n >= k >= 1 with n >= 2 (got n={n}, d={d}, k={k})")
    if not np.all(np.isfinite(X)):
        raise NonFinite("PCA input contains NaN or Inf")

    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (n - 1)
    evals, evecs = np.linalg.eigh(cov)  # ascending
    order = np.argsort(evals, kind="stable")[::-1]
    evals, evecs = evals[order], evecs[:, order]

    tol = 1e-12 * max(float(np.trace(cov)), 0.0)
    if np.count_nonzero(evals > tol) < k or float(np.trace(cov)) == 0.0:
        raise RankDeficient(f"fewer than {k} non-zero eigenvalues")

    components = evecs[:, :k].T.copy()
    # first entry within rounding of the row's max magnitude, so exact ties resolve stably
    mags = np.abs(components)
    pivots = np.argmax(mags >= mags.max(axis=1, keepdims=True) * (1 - 1e-9), axis=1)
    signs = np.sign(components[np.arange(k), pivots])
    components *= signs[:, None]
    return PcaModel(mean=mean, components=components, eigenvalues=np.maximum(evals[:k], 0.0))


def transform(model: PcaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.mean.shape[0]:
        raise DimensionMismatch(f"expected (m, {model.mean.shape[0]}), got {X.shape}")
    return (X - model.mean) @ model.components.T


def reduce(model: PcaModel, X, labels) -> ReducedDataset:
    return ReducedDataset(transform(model, X), np.asarray(labels, dtype=np.int64), model.fingerprint())


def fit_thresholds(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape[0] < 1:
        raise ValueError("need at least one row")
    return np.median(Z, axis=0)


def binarize(Z, thresholds, labels=None) -> BinaryDataset:
    """bit = 1 iff feature > threshold (strict)."""
    Z = np.asarray(Z, dtype=np.float64)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != thresholds.shape[0]:
        raise DimensionMismatch(f"{Z.shape[1] if Z.ndim == 2 else Z.shape} features vs {thresholds.shape[0]} thresholds")
    if labels is None:
        labels = np.zeros(Z.shape[0], dtype=np.int64)
    return BinaryDataset((Z > thresholds).astype(np.float64), thresholds, np.asarray(labels, dtype=np.int64))
