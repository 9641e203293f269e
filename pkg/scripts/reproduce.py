"""Run the full pipeline over several seeds and print a summary table.

    python3 scripts/reproduce.py                      # bundled fixture, seeds 0-4
    python3 scripts/reproduce.py --mnist-dir ~/mnist  # 2,000 train / 500 test from the official files
"""

import argparse
import json
import statistics
import sys
from pathlib import Path

from qbm_xai import cli

ROOT = Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "tests" / "data"


def data_flags(mnist_dir):
    if mnist_dir is None:
        return ["--train-images", str(FIXTURE / "mnist5k-images-idx3-ubyte.gz"),
                "--train-labels", str(FIXTURE / "mnist5k-labels-idx1-ubyte.gz")]
    root = Path(mnist_dir)

    def find(name):
        for candidate in (root / name, root / f"{name}.gz"):
            if candidate.exists():
                return str(candidate)
        sys.exit(f"{name} not found under {root}")

    return ["--train-images", find("train-images-idx3-ubyte"), "--train-labels", find("train-labels-idx1-ubyte"),
            "--test-images", find("t10k-images-idx3-ubyte"), "--test-labels", find("t10k-labels-idx1-ubyte"),
            "--max-train", "2000", "--max-test", "500"]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--mnist-dir")
    parser.add_argument("--seeds", type=int, nargs="+", default=list(range(5)))
    parser.add_argument("--out", default="runs/reproduce")
    args, extra = parser.parse_known_args()

    rows = []
    for seed in args.seeds:
        out = Path(args.out) / f"seed{seed}"
        code = cli.main(["run-all", *data_flags(args.mnist_dir), "--seed", str(seed), "--out", str(out), *extra])
        if code != 0:
            sys.exit(f"seed {seed} failed with exit code {code}")
        report = json.loads((out / "run_report.json").read_text())
        rows.append((seed, report["accuracies"], report["entropies"], report["silhouette"]))

    print(f"{'seed':>4} {'acc QBM':>8} {'acc CBM':>8} {'H QBM':>7} {'H CBM':>7} {'silh':>6}")
    for seed, acc, ent, sil in rows:
        print(f"{seed:>4} {acc['qbm']:>8.3f} {acc['cbm']:>8.3f} {ent['qbm']:>7.4f} {ent['cbm']:>7.4f} {sil:>6.3f}")
    print(f"mean {statistics.mean(r[1]['qbm'] for r in rows):>8.3f} {statistics.mean(r[1]['cbm'] for r in rows):>8.3f} "
          f"{statistics.mean(r[2]['qbm'] for r in rows):>7.4f} {statistics.mean(r[2]['cbm'] for r in rows):>7.4f} "
          f"{statistics.mean(r[3] for r in rows):>6.3f}")


if __name__ == "__main__":
    main()
