"""Classical RBM baseline ("CBM"): binary visible/hidden units trained by CD-1.

With 4 visible and 2 hidden units the joint state space has 64 configurations,
so the partition function and all conditionals can be enumerated exactly. The
enumeration is only used for checking; training never touches it.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .errors import EmptyBatch, EmptyData, NonBinaryInput
from .pca import BinaryDataset
from .seeding import stream


@dataclass
class CbmConfig:
    epochs: int = 50
    lr: float = 0.01
    batch_size: int | None = 16  # None = one full-batch CD-1 update per epoch
    n_hidden: int = 2
    seed: int = 0


@dataclass(frozen=True)
class RbmParams:
    W: np.ndarray  # (n_visible, n_hidden)
    b: np.ndarray  # visible bias
    c: np.ndarray  # hidden bias

    @property
    def n_visible(self) -> int:
        return self.W.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.W.shape[1]

    @classmethod
    def init(cls, n_visible: int, n_hidden: int, rng):
        return cls(rng.uniform(-0.1, 0.1, size=(n_visible, n_hidden)), np.zeros(n_visible), np.zeros(n_hidden))


@dataclass(frozen=True)
class RbmReadout:
    weights: np.ndarray  # (n_hidden,)
    bias: float


@dataclass
class CbmReport:
    reconstruction_history: list[float]  # entry 0 is the untrained model
    readout_loss_history: list[float]
    final_train_accuracy: float
    final_test_accuracy: float | None
    seed: int
    hyperparameters: dict = field(default_factory=dict)


def _binary(v, name="v") -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if not np.all((v == 0.0) | (v == 1.0)):
        raise NonBinaryInput(f"{name} must contain only 0 and 1")
    return v


def energy(v, h, params: RbmParams):
    """E(v, h) = -v.W.h - b.v - c.h (broadcasts over leading dims)."""
    v, h = _binary(v), _binary(h, "h")
    return -np.einsum("...i,ij,...j->...", v, params.W, h) - v @ params.b - h @ params.c


def all_states(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=n)))


def log_partition_function(params: RbmParams) -> float:
    V = all_states(params.n_visible)
    H = all_states(params.n_hidden)
    E = energy(V[:, None, :], H[None, :, :], params)
    return float(logsumexp(-E))


def partition_function(params: RbmParams) -> float:
    """Exact Z = sum over all (v, h) of exp(-E), accumulated as a log-sum-exp."""
    return float(np.exp(log_partition_function(params)))


def joint_probabilities(params: RbmParams) -> np.ndarray:
    """P(v, h) table of shape (2**n_visible, 2**n_hidden), rows/cols in itertools order."""
    V = all_states(params.n_visible)
    H = all_states(params.n_hidden)
    E = energy(V[:, None, :], H[None, :, :], params)
    return np.exp(-E - log_partition_function(params))


def hidden_activation(v, params: RbmParams) -> np.ndarray:
    """sigma(c + v.W) for real-valued v (no binary check)."""
    return expit(np.asarray(v, dtype=np.float64) @ params.W + params.c)


def hidden_probs(v, params: RbmParams) -> np.ndarray:
    return hidden_activation(_binary(v), params)


def visible_probs(h, params: RbmParams) -> np.ndarray:
    h = _binary(h, "h")
    return expit(h @ params.W.T + params.b)


def gibbs_step(v, params: RbmParams, rng):
    """h ~ P(h|v), then v' ~ P(v|h). Returns (h_sample, v_sample)."""
    ph = hidden_probs(v, params)
    h = (rng.random(ph.shape) < ph).astype(np.float64)
    pv = visible_probs(h, params)
    v_new = (rng.random(pv.shape) < pv).astype(np.float64)
    return h, v_new


def cd1_update(batch, params: RbmParams, lr: float, rng) -> RbmParams:
    """One CD-1 step.

    Positive phase uses p(h|v); the negative phase samples h then v' and uses
    p(h|v') for the statistics.
    """
    v = _binary(np.atleast_2d(batch))
    if v.shape[0] == 0:
        raise EmptyBatch("CD-1 on an empty batch")
    ph = hidden_probs(v, params)
    _, v_neg = gibbs_step(v, params, rng)
    ph_neg = hidden_probs(v_neg, params)
    m = v.shape[0]
    dW = (v.T @ ph - v_neg.T @ ph_neg) / m
    db = (v - v_neg).mean(axis=0)
    dc = (ph - ph_neg).mean(axis=0)
    return RbmParams(params.W + lr * dW, params.b + lr * db, params.c + lr * dc)


def reconstruction_error(v, params: RbmParams) -> float:
    """Mean squared error of the mean-field reconstruction p(v | p(h|v))."""
    v = _binary(np.atleast_2d(v))
    recon = expit(hidden_activation(v, params) @ params.W.T + params.b)
    return float(np.mean((v - recon) ** 2))


def train_rbm(data: BinaryDataset, config: CbmConfig | None = None):
    """``epochs`` passes of CD-1; returns (params, reconstruction-error history)."""
    config = config or CbmConfig()
    if len(data) == 0:
        raise EmptyData("empty training set")
    bits = _binary(data.bits)
    params = RbmParams.init(bits.shape[1], config.n_hidden, stream(config.seed, "init-rbm"))
    gibbs = stream(config.seed, "gibbs")
    order_rng = stream(config.seed, "cbm-batches")
    n = bits.shape[0]
    batch = n if config.batch_size is None else max(1, min(config.batch_size, n))
    history = [reconstruction_error(bits, params)]
    for _ in range(config.epochs):
        order = np.arange(n) if batch == n else order_rng.permutation(n)
        for start in range(0, n, batch):
            params = cd1_update(bits[order[start:start + batch]], params, config.lr, gibbs)
        history.append(reconstruction_error(bits, params))
    return params, history


def readout_probs(params: RbmParams, readout: RbmReadout, v) -> np.ndarray:
    """P(label = 1) from hidden probabilities; accepts real-valued v (Shapley baselines)."""
    return expit(hidden_activation(v, params) @ readout.weights + readout.bias)


def train_readout(params: RbmParams, data: BinaryDataset, config: CbmConfig | None = None):
    """Logistic regression on p(h|v) with the RBM frozen. Returns (readout, loss history)."""
    config = config or CbmConfig()
    if len(data) == 0:
        raise EmptyData("empty training set")
    features = hidden_probs(data.bits, params)
    y = data.labels.astype(np.float64)
    rng = stream(config.seed, "init-readout")
    w = rng.uniform(-0.01, 0.01, size=params.n_hidden)
    bias = 0.0
    n = len(y)
    batch = n if config.batch_size is None else max(1, min(config.batch_size, n))
    order_rng = stream(config.seed, "readout-batches")
    history = []
    for _ in range(config.epochs):
        order = np.arange(n) if batch == n else order_rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            residual = expit(features[idx] @ w + bias) - y[idx]
            w = w - config.lr * residual @ features[idx] / idx.size
            bias = bias - config.lr * float(residual.mean())
        p = np.clip(expit(features @ w + bias), 1e-12, 1 - 1e-12)
        history.append(float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p))))
    return RbmReadout(w, bias), history


def classify_accuracy(params: RbmParams, readout: RbmReadout, data: BinaryDataset) -> float:
    if len(data) == 0:
        raise EmptyData("accuracy of an empty dataset")
    predicted = (readout_probs(params, readout, _binary(data.bits)) > 0.5).astype(np.int64)
    return float(np.mean(predicted == data.labels))


def train_cbm(data: BinaryDataset, config: CbmConfig | None = None, test: BinaryDataset | None = None):
    """RBM by CD-1, then the logistic head. Returns (params, readout, CbmReport)."""
    config = config or CbmConfig()
    params, recon = train_rbm(data, config)
    readout, readout_loss = train_readout(params, data, config)
    report = CbmReport(
        reconstruction_history=recon,
        readout_loss_history=readout_loss,
        final_train_accuracy=classify_accuracy(params, readout, data),
        final_test_accuracy=classify_accuracy(params, readout, test) if test is not None else None,
        seed=config.seed,
        hyperparameters=asdict(config),
    )
    return params, readout, report
