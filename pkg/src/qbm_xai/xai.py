"""Feature attributions and their entropy.

QBM: mean absolute input-gradient of the predicted probability (saliency).
CBM: mean absolute exact Shapley value of the readout probability.
Both are normalized onto the simplex and summarized by Shannon entropy in nats.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import qgrad
from .errors import DimensionMismatch, EmptyData, NonFiniteValue, NotADistribution
from .pca import BinaryDataset, ReducedDataset
from .qbm import QbmModel, latent
from .rbm import RbmParams, RbmReadout, readout_probs


@dataclass
class AttributionReport:
    model_tag: str
    raw_scores: np.ndarray
    distribution: np.ndarray
    entropy_nats: float
    degenerate: bool = False
    per_sample: np.ndarray | None = field(default=None, repr=False)

    @property
    def feature_names(self) -> list[str]:
        return [f"PC{i}" for i in range(len(self.raw_scores))]

    def ranking(self) -> list[str]:
        order = np.argsort(-self.distribution, kind="stable")
        return [self.feature_names[i] for i in order]

    def to_dict(self) -> dict:
        return {
            "model": self.model_tag,
            "entropy_nats": self.entropy_nats,
            "degenerate": self.degenerate,
            "features": [
                {"feature": name, "raw_score": float(r), "probability": float(p)}
                for name, r, p in zip(self.feature_names, self.raw_scores, self.distribution)
            ],
        }

    def csv_rows(self) -> list[list]:
        return [
            [self.model_tag, name, repr(float(r)), repr(float(p)), repr(self.entropy_nats)]
            for name, r, p in zip(self.feature_names, self.raw_scores, self.distribution)
        ]


CSV_HEADER = ["model", "feature", "raw_score", "probability", "entropy_nats"]


def to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rep in reports:
        writer.writerows(rep.csv_rows())
    return buf.getvalue()


def entropy(distribution) -> float:
    """-sum p ln p with 0 ln 0 = 0."""
    p = np.asarray(distribution, dtype=np.float64)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise NotADistribution("entries must be >= 0 and sum to 1")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def normalize(scores) -> tuple[np.ndarray, bool]:
    """Project non-negative scores onto the simplex; all-zero input -> (uniform, degenerate)."""
    scores = np.asarray(scores, dtype=np.float64)
    total = scores.sum()
    if not total > 0:
        return np.full(scores.shape, 1.0 / scores.size), True
    return scores / total, False


def make_report(tag: str, per_sample) -> AttributionReport:
    per_sample = np.asarray(per_sample, dtype=np.float64)
    raw = np.abs(per_sample).mean(axis=0)
    dist, degenerate = normalize(raw)
    return AttributionReport(tag, raw, dist, entropy(dist), degenerate, per_sample)


def saliency_gradients(model: QbmModel, x) -> np.ndarray:
    """d P(label=1) / d raw feature for each row, shape (n, k)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    angles = model.scale(x)
    z = latent(model, x)
    p = expit(z @ model.readout_weights + model.readout_bias)
    dz_dangle = qgrad.input_jacobian(angles, model.circuit)  # (n, k, qubits)
    dp_dangle = (p * (1 - p))[:, None] * (dz_dangle @ model.readout_weights)
    return dp_dangle * model.scale_factor(x)


def qbm_saliency(model: QbmModel, data: ReducedDataset) -> AttributionReport:
    if len(data) == 0:
        raise EmptyData("saliency of an empty dataset")
    return make_report("QBM", saliency_gradients(model, data.features))


def exact_shapley(value_fn, x, baseline) -> np.ndarray:
    """Exact Shapley values by enumerating all 2**k coalitions.

    ``value_fn`` maps an (m, k) array of inputs to m values. Features outside a
    coalition take their ``baseline`` value.
    """
    x = np.asarray(x, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    k = x.shape[0]
    if baseline.shape != x.shape:
        raise DimensionMismatch("x and baseline differ in length")
    masks = (np.arange(1 << k)[:, None] >> np.arange(k)[None, :]) & 1  # bit i = feature i present
    values = np.asarray(value_fn(np.where(masks == 1, x, baseline)), dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("value function returned NaN or Inf")
    sizes = masks.sum(axis=1)
    weights = np.array([math.factorial(s) * math.factorial(k - s - 1) / math.factorial(k) for s in range(k)])
    phi = np.zeros(k)
    for i in range(k):
        without = np.flatnonzero(masks[:, i] == 0)
        phi[i] = np.sum(weights[sizes[without]] * (values[without | (1 << i)] - values[without]))
    return phi


def cbm_shapley_values(params: RbmParams, readout: RbmReadout, bits, baseline) -> np.ndarray:
    bits = np.atleast_2d(np.asarray(bits, dtype=np.float64))
    value_fn = lambda v: readout_probs(params, readout, v)  # noqa: E731
    return np.array([exact_shapley(value_fn, row, baseline) for row in bits])


def cbm_attribution(params: RbmParams, readout: RbmReadout, data: BinaryDataset, baseline) -> AttributionReport:
    """Shapley attribution over ``data``; ``baseline`` is the training-set mean bit vector."""
    if len(data) == 0:
        raise EmptyData("attribution of an empty dataset")
    return make_report("CBM", cbm_shapley_values(params, readout, data.bits, baseline))


@dataclass
class Comparison:
    qbm: AttributionReport
    cbm: AttributionReport

    @property
    def entropy_delta(self) -> float:
        """entropy(QBM) - entropy(CBM); negative means the QBM is more concentrated."""
        return self.qbm.entropy_nats - self.cbm.entropy_nats

    def to_dict(self) -> dict:
        return {
            "features": self.qbm.feature_names,
            "qbm_distribution": self.qbm.distribution.tolist(),
            "cbm_distribution": self.cbm.distribution.tolist(),
            "qbm_entropy": self.qbm.entropy_nats,
            "cbm_entropy": self.cbm.entropy_nats,
            "entropy_delta": self.entropy_delta,
            "qbm_ranking": self.qbm.ranking(),
            "cbm_ranking": self.cbm.ranking(),
        }


def compare(qbm_rep: AttributionReport, cbm_rep: AttributionReport) -> Comparison:
    if qbm_rep.distribution.shape != cbm_rep.distribution.shape:
        raise DimensionMismatch("reports cover different feature counts")
    return Comparison(qbm_rep, cbm_rep)
