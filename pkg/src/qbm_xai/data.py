"""MNIST IDX parsing, 0/1 filtering and deterministic splits."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMagic, DegenerateSplit, EmptyResult, IoFailure, TruncatedPayload

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049


@dataclass(frozen=True)
class RawDataset:
    images: np.ndarray  # (n, 784) float64 in [0, 1]
    labels: np.ndarray  # (n,) int64 in {0, 1}
    source_digit_map: tuple[int, ...] = (0, 1)  # source_digit_map[j] is the digit recoded to j

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ValueError("images and labels disagree on sample count")

    def __len__(self):
        return int(self.labels.shape[0])


def _read_bytes(path) -> bytes:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except OSError as exc:
            raise IoFailure(f"corrupt gzip stream in {path}: {exc}") from exc
    return raw


def _parse_idx(raw: bytes, expected_magic: int, path) -> tuple[tuple[int, ...], bytes]:
    if len(raw) < 4:
        raise TruncatedPayload(f"{path}: file shorter than the IDX magic number")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise BadMagic(f"{path}: magic {magic}, expected {expected_magic}")
    ndim = magic & 0xFF
    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise TruncatedPayload(f"{path}: header truncated")
    dims = struct.unpack(f">{ndim}I", raw[4:header_len])
    payload = raw[header_len:]
    expected = int(np.prod(dims, dtype=np.int64))
    if len(payload) != expected:
        raise TruncatedPayload(f"{path}: payload has {len(payload)} bytes, header implies {expected}")
    return dims, payload


def load_idx_images(path) -> np.ndarray:
    """Read an IDX3 image file (optionally gzipped) into an (n, rows*cols) array in [0, 1]."""
    dims, payload = _parse_idx(_read_bytes(path), IMAGE_MAGIC, path)
    n, rows, cols = dims
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(n, rows * cols)
    return pixels.astype(np.float64) / 255.0


def load_idx_labels(path) -> np.ndarray:
    dims, payload = _parse_idx(_read_bytes(path), LABEL_MAGIC, path)
    return np.frombuffer(payload, dtype=np.uint8).astype(np.int64).reshape(dims[0])


def idx_image_bytes(images: np.ndarray, rows: int = 28, cols: int = 28) -> bytes:
    """Serialize pixel intensities in [0, 1] (or raw uint8) to IDX3 bytes."""
    images = np.asarray(images)
    if images.dtype != np.uint8:
        images = np.rint(images * 255.0).astype(np.uint8)
    n = images.shape[0]
    return struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols) + images.reshape(n, rows * cols).tobytes()


def idx_label_bytes(labels) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", LABEL_MAGIC, labels.shape[0]) + labels.tobytes()


def write_idx_images(path, images, rows: int = 28, cols: int = 28, compress: bool = False):
    data = idx_image_bytes(images, rows, cols)
    Path(path).write_bytes(gzip.compress(data, mtime=0) if compress else data)


def write_idx_labels(path, labels, compress: bool = False):
    data = idx_label_bytes(labels)
    Path(path).write_bytes(gzip.compress(data, mtime=0) if compress else data)


def filter_binary(images, labels, keep=(0, 1)) -> RawDataset:
    """Keep rows whose label is in ``keep`` and recode ``keep[j]`` to ``j``.

    Passing an already-filtered dataset's arrays with the default ``keep`` is a no-op.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.isin(labels, keep)
    if not mask.any():
        raise EmptyResult(f"no samples with labels in {tuple(keep)}")
    recode = {digit: j for j, digit in enumerate(keep)}
    kept = labels[mask]
    return RawDataset(
        images=images[mask],
        labels=np.array([recode[int(d)] for d in kept], dtype=np.int64),
        source_digit_map=tuple(int(d) for d in keep),
    )


def split(dataset: RawDataset, train_fraction: float = 0.8, seed: int = 0) -> tuple[RawDataset, RawDataset]:
    """Stratified seeded split; each side keeps its rows in original order.

    Raises DegenerateSplit unless both sides see both classes.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    if len(dataset) == 0:
        raise EmptyResult("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    train_idx = []
    for cls in (0, 1):
        members = np.flatnonzero(dataset.labels == cls)
        if members.size == 0:
            raise DegenerateSplit(f"class {cls} is absent")
        n_train = int(round(train_fraction * members.size))
        if n_train == 0 or n_train == members.size:
            raise DegenerateSplit(f"class {cls} has {members.size} samples, cannot appear on both sides")
        train_idx.append(rng.permutation(members)[:n_train])
    mask = np.zeros(len(dataset), dtype=bool)
    mask[np.concatenate(train_idx)] = True
    return _take(dataset, mask), _take(dataset, ~mask)


def subsample(dataset: RawDataset, n: int, seed: int = 0) -> RawDataset:
    """Seeded subset of ``n`` rows without replacement (original order kept)."""
    if n >= len(dataset):
        return dataset
    rng = np.random.default_rng(seed)
    mask = np.zeros(len(dataset), dtype=bool)
    mask[rng.choice(len(dataset), size=n, replace=False)] = True
    return _take(dataset, mask)


def _take(dataset: RawDataset, mask) -> RawDataset:
    return RawDataset(dataset.images[mask], dataset.labels[mask], dataset.source_digit_map)
