"""Exact t-SNE of latent expectation vectors and a silhouette score."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateDistances, EmptyData, PerplexityTooLarge, SingleCluster
from .pca import ReducedDataset
from .qbm import QbmModel, latent
from .seeding import stream

EPS = 1e-12


@dataclass
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum_switch: int = 250
    init_scale: float = 1e-4
    seed: int = 0


@dataclass
class Embedding2D:
    points: np.ndarray
    kl_history: list[float]
    config: dict


def latent_states(model: QbmModel, data: ReducedDataset) -> np.ndarray:
    if len(data) == 0:
        raise EmptyData("no samples to embed")
    return latent(model, data.features)


def squared_distances(X) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def _row_entropy(d_row, beta):
    """Entropy (nats) and probabilities of exp(-beta * d) over the off-diagonal row."""
    shifted = d_row - d_row.min()
    w = np.exp(-beta * shifted)
    s = w.sum()
    p = w / s
    H = np.log(s) + beta * np.sum(shifted * p)
    return H, p


def conditional_probabilities(D, perplexity: float, tol: float = 1e-5, max_iter: int = 50):
    """Per-row binary search on the Gaussian precision so each row's entropy is ln(perplexity).

    Returns (P_conditional, betas); row i holds p_{j|i} with p_{i|i} = 0.
    """
    n = D.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    betas = np.ones(n)
    for i in range(n):
        d_row = np.delete(D[i], i)
        beta, lo, hi = 1.0, -np.inf, np.inf
        H, p = _row_entropy(d_row, beta)
        for _ in range(max_iter):
            diff = H - target
            if abs(diff) < tol:
                break
            if diff > 0:  # too flat: sharpen
                lo = beta
                beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = beta / 2.0 if lo == -np.inf else (beta + lo) / 2.0
            H, p = _row_entropy(d_row, beta)
        P[i, np.arange(n) != i] = p
        betas[i] = beta
    return P, betas


def joint_probabilities(D, perplexity: float) -> np.ndarray:
    """Symmetrized p_ij from squared distances, zero diagonal."""
    # calibration is scale-free; normalizing keeps the first beta guess sensible
    Pc, _ = conditional_probabilities(D / np.median(D[D > 0]), perplexity)
    P = Pc + Pc.T
    P = np.maximum(P / P.sum(), EPS)
    np.fill_diagonal(P, 0.0)
    return P


def _kl(P, Q):
    return float(np.sum(P * np.log(P / Q)))


def tsne(points, config: TsneConfig | None = None) -> Embedding2D:
    """Exact O(n^2) t-SNE to 2-D with early exaggeration, momentum and gains."""
    config = config or TsneConfig()
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[0]
    if n <= 3 * config.perplexity:
        raise PerplexityTooLarge(f"need more than {3 * config.perplexity:g} points, got {n}")
    D = squared_distances(X)
    if not np.any(D > 0):
        raise DegenerateDistances("all pairwise distances are zero")
    P = joint_probabilities(D, config.perplexity)

    rng = stream(config.seed, "tsne")
    Y = rng.normal(0.0, config.init_scale, size=(n, 2))
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    history = []
    off_diag = ~np.eye(n, dtype=bool)
    for it in range(config.iterations):
        exaggerate = it < config.exaggeration_iters
        P_eff = P * config.exaggeration if exaggerate else P
        num = 1.0 / (1.0 + squared_distances(Y))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), EPS)

        W = (P_eff - Q) * num
        grad = 4.0 * (np.diag(W.sum(axis=1)) - W) @ Y

        momentum = 0.5 if it < config.momentum_switch else 0.8
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        velocity = momentum * velocity - config.learning_rate * gains * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)

        num = 1.0 / (1.0 + squared_distances(Y))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), EPS)
        history.append(_kl(P[off_diag], Q[off_diag]))
    return Embedding2D(Y, history, asdict(config))


def silhouette(points, labels) -> float:
    """Mean silhouette (b - a) / max(a, b); a singleton cluster has a = 0."""
    X = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    D = np.sqrt(squared_distances(X))
    scores = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        own = labels == labels[i]
        n_own = own.sum() - 1
        a = D[i, own].sum() / n_own if n_own > 0 else 0.0
        b = min(D[i, labels == c].mean() for c in classes if c != labels[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())
