"""Build the bundled MNIST test fixture from mlxtend's 5k-sample MNIST subset.

The subset (500 images per digit, drawn from the MNIST training set) ships inside
the mlxtend wheel as ``mlxtend/data/data/mnist_5k.csv.gz``: 784 pixel columns
followed by the label.

    python scripts/make_fixture.py path/to/mnist_5k.csv.gz tests/data
"""

import argparse
import gzip
from pathlib import Path

import numpy as np

from qbm_xai.data import write_idx_images, write_idx_labels


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv", type=Path)
    parser.add_argument("out_dir", type=Path)
    args = parser.parse_args()

    table = np.loadtxt(gzip.open(args.csv, "rt"), delimiter=",", dtype=np.int64)
    pixels = table[:, :784].astype(np.uint8)
    labels = table[:, 784].astype(np.uint8)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx_images(args.out_dir / "mnist5k-images-idx3-ubyte.gz", pixels, compress=True)
    write_idx_labels(args.out_dir / "mnist5k-labels-idx1-ubyte.gz", labels, compress=True)
    print(f"wrote {len(labels)} samples, label counts {np.bincount(labels).tolist()}")


if __name__ == "__main__":
    main()
