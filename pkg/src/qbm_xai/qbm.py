"""Hybrid quantum-classical classifier ("QBM").

Raw PCA features are min-max scaled to RY angles in [0, pi], pushed through the
angle embedding and strongly entangling layers, and the Pauli-Z expectations
feed an affine + sigmoid readout. Training is plain gradient descent on binary
cross-entropy; circuit gradients come from the parameter-shift rule.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from . import qgrad
from .errors import DegenerateData, DimensionMismatch, EmptyBatch, EmptyData, NonFiniteLoss
from .pca import ReducedDataset
from .qsim import CircuitParams, forward
from .seeding import stream

PROB_CLAMP = 1e-12


@dataclass
class QbmConfig:
    epochs: int = 50
    lr: float = 0.01
    batch_size: int | None = 16  # None = full batch
    layers: int = 2
    entangle_range: int = 1
    seed: int = 0


@dataclass(frozen=True)
class QbmModel:
    circuit: CircuitParams
    readout_weights: np.ndarray  # (n,)
    readout_bias: float
    scaler_min: np.ndarray  # (k,)
    scaler_max: np.ndarray  # (k,)

    @property
    def n_features(self) -> int:
        return self.scaler_min.shape[0]

    def scale(self, x) -> np.ndarray:
        """Map raw features to embedding angles in [0, pi], clipping out-of-range inputs."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {x.shape[-1]}")
        span = self.scaler_max - self.scaler_min
        return np.clip((x - self.scaler_min) / span * np.pi, 0.0, np.pi)

    def scale_factor(self, x) -> np.ndarray:
        """d angle / d feature: pi / span inside the training range, 0 where clipped."""
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= self.scaler_min) & (x <= self.scaler_max)
        return np.where(inside, np.pi / (self.scaler_max - self.scaler_min), 0.0)


@dataclass
class TrainReport:
    loss_history: list[float]
    final_train_accuracy: float
    final_test_accuracy: float | None
    seed: int
    hyperparameters: dict = field(default_factory=dict)


def fit_scaler(features) -> tuple[np.ndarray, np.ndarray]:
    features = np.asarray(features, dtype=np.float64)
    lo, hi = features.min(axis=0), features.max(axis=0)
    if np.any(hi <= lo):
        raise DegenerateData(f"constant feature(s) {np.flatnonzero(hi <= lo).tolist()}; cannot scale")
    return lo, hi


def init_model(features, config: QbmConfig) -> QbmModel:
    lo, hi = fit_scaler(features)
    rng = stream(config.seed, "init")
    n = lo.shape[0]
    circuit = CircuitParams.random(config.layers, n, rng, config.entangle_range)
    weights = rng.uniform(-0.01, 0.01, size=n)
    return QbmModel(circuit, weights, 0.0, lo, hi)


def latent(model: QbmModel, x) -> np.ndarray:
    """Pauli-Z expectation vector for each (raw) input row."""
    return forward(model.scale(x), model.circuit)


def _logit(model: QbmModel, z) -> np.ndarray:
    return z @ model.readout_weights + model.readout_bias


def predict(model: QbmModel, x) -> np.ndarray:
    p = expit(_logit(model, latent(model, x)))
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def bce(p, y) -> float:
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    if p.size == 0:
        raise EmptyBatch("loss of an empty batch")
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def loss(model: QbmModel, x, y) -> float:
    if len(y) == 0:
        raise EmptyBatch("loss of an empty batch")
    return bce(predict(model, x), y)


def gradients(model: QbmModel, x, y):
    """Mean-BCE gradients w.r.t. (theta, readout weights, readout bias)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise EmptyBatch("gradient of an empty batch")
    angles = model.scale(x)
    z = forward(angles, model.circuit)  # (B, n)
    residual = expit(_logit(model, z)) - y  # dL/dlogit per sample
    dz_dtheta = qgrad.theta_jacobian(angles, model.circuit)  # (B, P, n)
    g_theta = np.einsum("b,bpn,n->p", residual, dz_dtheta, model.readout_weights) / y.size
    g_w = residual @ z / y.size
    g_b = float(residual.mean())
    return g_theta.reshape(model.circuit.theta.shape), g_w, g_b


def _step(model: QbmModel, grads, lr: float) -> QbmModel:
    g_theta, g_w, g_b = grads
    circuit = CircuitParams(model.circuit.theta - lr * g_theta, model.circuit.entangle_range)
    return QbmModel(
        circuit,
        model.readout_weights - lr * g_w,
        model.readout_bias - lr * g_b,
        model.scaler_min,
        model.scaler_max,
    )


def train(data: ReducedDataset, config: QbmConfig | None = None, test: ReducedDataset | None = None):
    """Gradient-descent training; returns ``(model, TrainReport)``.

    ``loss_history[e]`` is the full training-set loss after epoch ``e``.
    """
    config = config or QbmConfig()
    if len(data) == 0:
        raise EmptyData("empty training set")
    if np.unique(data.labels).size < 2:
        raise DegenerateData("training data contains a single class")
    model = init_model(data.features, config)
    batch_rng = stream(config.seed, "qbm-batches")
    n = len(data)
    batch = n if config.batch_size is None else max(1, min(config.batch_size, n))

    history = []
    for _ in range(config.epochs):
        order = np.arange(n) if batch == n else batch_rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            model = _step(model, gradients(model, data.features[idx], data.labels[idx]), config.lr)
        epoch_loss = loss(model, data.features, data.labels)
        if not np.isfinite(epoch_loss):
            raise NonFiniteLoss(f"loss diverged at epoch {len(history)}")
        history.append(epoch_loss)

    report = TrainReport(
        loss_history=history,
        final_train_accuracy=evaluate_accuracy(model, data),
        final_test_accuracy=evaluate_accuracy(model, test) if test is not None else None,
        seed=config.seed,
        hyperparameters=asdict(config),
    )
    return model, report


def evaluate_accuracy(model: QbmModel, data: ReducedDataset) -> float:
    """Fraction with (p > 0.5) == label; p == 0.5 counts as class 0."""
    if len(data) == 0:
        raise EmptyData("accuracy of an empty dataset")
    predicted = (predict(model, data.features) > 0.5).astype(np.int64)
    return float(np.mean(predicted == data.labels))
