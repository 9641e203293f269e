import os
import struct
from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).parent / "data"
FIXTURE_IMAGES = DATA_DIR / "mnist5k-images-idx3-ubyte.gz"
FIXTURE_LABELS = DATA_DIR / "mnist5k-labels-idx1-ubyte.gz"

OFFICIAL_NAMES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def official_mnist_paths():
    """Paths to the official MNIST files under $MNIST_DIR (plain or .gz), or None."""
    root = os.environ.get("MNIST_DIR")
    if not root:
        return None
    paths = {}
    for key, name in OFFICIAL_NAMES.items():
        for candidate in (Path(root) / name, Path(root) / f"{name}.gz"):
            if candidate.exists():
                paths[key] = candidate
                break
        else:
            return None
    return paths


def write_raw(path, header_ints, payload: bytes):
    path.write_bytes(struct.pack(f">{len(header_ints)}I", *header_ints) + payload)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
