"""Versioned flat binary artifacts.

Layout::

    b"QXAI"            4-byte magic
    version            1 byte (FORMAT_VERSION)
    header_len         u32 big-endian
    header             UTF-8 JSON: kind, meta, array table (name, dtype, shape, offset)
    payload            raw little-endian array bytes, in header order

Serialization is byte-for-byte deterministic for equal inputs.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, IoFailure, MissingArtifact
from .pca import BinaryDataset, PcaModel, ReducedDataset, SIGN_CONVENTION
from .qbm import QbmModel
from .qsim import CircuitParams
from .rbm import RbmParams, RbmReadout

MAGIC = b"QXAI"
FORMAT_VERSION = 1


def dumps(kind: str, arrays: dict, meta: dict | None = None) -> bytes:
    table, chunks, offset = [], [], 0
    for name in sorted(arrays):
        arr = np.asarray(arrays[name])
        dtype = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
        raw = np.ascontiguousarray(arr, dtype=dtype).tobytes()
        table.append({"name": name, "dtype": dtype.str, "shape": list(arr.shape), "offset": offset})
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps({"kind": kind, "meta": meta or {}, "arrays": table}, sort_keys=True).encode()
    return MAGIC + bytes([FORMAT_VERSION]) + struct.pack(">I", len(header)) + header + b"".join(chunks)


def loads(blob: bytes, expected_kind: str | None = None):
    if blob[:4] != MAGIC:
        raise FormatError("not a QXAI artifact")
    if blob[4] != FORMAT_VERSION:
        raise FormatError(f"unsupported artifact version {blob[4]}")
    (hlen,) = struct.unpack(">I", blob[5:9])
    header = json.loads(blob[9:9 + hlen])
    if expected_kind is not None and header["kind"] != expected_kind:
        raise FormatError(f"artifact holds {header['kind']!r}, expected {expected_kind!r}")
    payload = blob[9 + hlen:]
    arrays = {}
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        arr = np.frombuffer(payload, dtype=dtype, count=count, offset=entry["offset"])
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return header["kind"], arrays, header["meta"]


def save(path, kind: str, arrays: dict, meta: dict | None = None) -> str:
    blob = dumps(kind, arrays, meta)
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return hashlib.sha256(blob).hexdigest()


def load(path, expected_kind: str | None = None):
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(f"missing artifact {path}")
    return loads(path.read_bytes(), expected_kind)


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# typed wrappers -----------------------------------------------------------

def save_pca(path, model: PcaModel) -> str:
    return save(path, "pca", {"mean": model.mean, "components": model.components, "eigenvalues": model.eigenvalues},
                {"k": model.k, "sign_convention": SIGN_CONVENTION})


def load_pca(path) -> PcaModel:
    _, a, _ = load(path, "pca")
    return PcaModel(a["mean"], a["components"], a["eigenvalues"])


def save_reduced(path, data: ReducedDataset) -> str:
    return save(path, "reduced", {"features": data.features, "labels": data.labels},
                {"model_fingerprint": data.model_fingerprint})


def load_reduced(path) -> ReducedDataset:
    _, a, meta = load(path, "reduced")
    return ReducedDataset(a["features"], a["labels"], meta["model_fingerprint"])


def save_binary(path, data: BinaryDataset) -> str:
    return save(path, "binary", {"bits": data.bits, "thresholds": data.thresholds, "labels": data.labels})


def load_binary(path) -> BinaryDataset:
    _, a, _ = load(path, "binary")
    return BinaryDataset(a["bits"], a["thresholds"], a["labels"])


def save_qbm(path, model: QbmModel, config: dict) -> str:
    arrays = {
        "theta": model.circuit.theta,
        "readout_weights": model.readout_weights,
        "readout_bias": np.array([model.readout_bias]),
        "scaler_min": model.scaler_min,
        "scaler_max": model.scaler_max,
    }
    return save(path, "qbm", arrays, {"entangle_range": model.circuit.entangle_range, "config": config})


def load_qbm(path) -> QbmModel:
    _, a, meta = load(path, "qbm")
    circuit = CircuitParams(a["theta"], meta["entangle_range"])
    return QbmModel(circuit, a["readout_weights"], float(a["readout_bias"][0]), a["scaler_min"], a["scaler_max"])


def save_cbm(path, params: RbmParams, readout: RbmReadout, config: dict) -> str:
    arrays = {
        "W": params.W,
        "b": params.b,
        "c": params.c,
        "readout_weights": readout.weights,
        "readout_bias": np.array([readout.bias]),
    }
    return save(path, "cbm", arrays, {"config": config})


def load_cbm(path) -> tuple[RbmParams, RbmReadout]:
    _, a, _ = load(path, "cbm")
    return RbmParams(a["W"], a["b"], a["c"]), RbmReadout(a["readout_weights"], float(a["readout_bias"][0]))
