"""Experiment harness: prepare -> train-qbm / train-cbm -> explain -> tsne, or run-all.

Exit codes: 0 ok, 1 unexpected error, 2 bad usage/config, 3 I/O failure,
4 malformed input file, 5 data error (empty/degenerate), 6 numerical failure,
7 missing artifact (run an earlier stage first), 8 degenerate attribution.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import artifacts, data, embed, pca, qbm, rbm, xai
from .config import RunConfig
from .errors import DegenerateAttribution, MissingArtifact, QbmXaiError
from .pca import ReducedDataset
from .seeding import sub_seed

log = logging.getLogger("qbm_xai")

PREPARED = {
    "pca": "pca.qxa",
    "train_reduced": "train_reduced.qxa",
    "test_reduced": "test_reduced.qxa",
    "train_binary": "train_binary.qxa",
    "test_binary": "test_binary.qxa",
}


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_split(config: RunConfig):
    dc = config.data
    if not dc.train_images or not dc.train_labels:
        raise MissingArtifact("no training data: pass --train-images and --train-labels")
    full = data.filter_binary(data.load_idx_images(dc.train_images), data.load_idx_labels(dc.train_labels))
    if dc.test_images and dc.test_labels:
        train = full
        test = data.filter_binary(data.load_idx_images(dc.test_images), data.load_idx_labels(dc.test_labels))
        mode = "separate-files"
    else:
        train, test = data.split(full, dc.train_fraction, sub_seed(config.seed, "split"))
        mode = "single-file-split"
    if dc.max_train is not None:
        train = data.subsample(train, dc.max_train, sub_seed(config.seed, "subsample-train"))
    if dc.max_test is not None:
        test = data.subsample(test, dc.max_test, sub_seed(config.seed, "subsample-test"))
    return train, test, mode


def cmd_prepare(config: RunConfig) -> dict:
    out = _out(config)
    train, test, mode = _load_split(config)
    model = pca.fit_pca(train.images, config.data.pca_k)
    train_z = pca.reduce(model, train.images, train.labels)
    test_z = pca.reduce(model, test.images, test.labels)
    thresholds = pca.fit_thresholds(train_z.features)
    train_b = pca.binarize(train_z.features, thresholds, train.labels)
    test_b = pca.binarize(test_z.features, thresholds, test.labels)

    hashes = {
        PREPARED["pca"]: artifacts.save_pca(out / PREPARED["pca"], model),
        PREPARED["train_reduced"]: artifacts.save_reduced(out / PREPARED["train_reduced"], train_z),
        PREPARED["test_reduced"]: artifacts.save_reduced(out / PREPARED["test_reduced"], test_z),
        PREPARED["train_binary"]: artifacts.save_binary(out / PREPARED["train_binary"], train_b),
        PREPARED["test_binary"]: artifacts.save_binary(out / PREPARED["test_binary"], test_b),
    }
    report = {
        "split_mode": mode,
        "split_seed": sub_seed(config.seed, "split"),
        "n_train": len(train),
        "n_test": len(test),
        "train_class_counts": np.bincount(train.labels, minlength=2).tolist(),
        "test_class_counts": np.bincount(test.labels, minlength=2).tolist(),
        "pca_fingerprint": model.fingerprint(),
        "pca_eigenvalues": model.eigenvalues.tolist(),
        "binarization_thresholds": thresholds.tolist(),
        "artifact_hashes": hashes,
        "config": config.to_dict(),
    }
    _write_json(out / "prepare.json", report)
    log.info("prepared %d train / %d test rows (%s)", len(train), len(test), mode)
    return report


def _qbm_inputs(config: RunConfig, out: Path):
    """Continuous PCA features by default; median bits with --qbm-binary-input."""
    if config.data.qbm_binary_input:
        tr, te = (artifacts.load_binary(out / PREPARED[k]) for k in ("train_binary", "test_binary"))
        return ReducedDataset(tr.bits, tr.labels, "binary"), ReducedDataset(te.bits, te.labels, "binary")
    return (artifacts.load_reduced(out / PREPARED[k]) for k in ("train_reduced", "test_reduced"))


def cmd_train_qbm(config: RunConfig) -> dict:
    out = _out(config)
    train, test = _qbm_inputs(config, out)
    model, rep = qbm.train(train, config.qbm, test)
    digest = artifacts.save_qbm(out / "qbm_model.qxa", model, config.to_dict()["qbm"])
    report = {
        "model": "QBM",
        "loss_history": rep.loss_history,
        "final_train_accuracy": rep.final_train_accuracy,
        "final_test_accuracy": rep.final_test_accuracy,
        "seed": rep.seed,
        "hyperparameters": rep.hyperparameters,
        "binary_input": config.data.qbm_binary_input,
        "artifact_hash": digest,
    }
    _write_json(out / "qbm_report.json", report)
    log.info("QBM test accuracy %.4f", rep.final_test_accuracy)
    return report


def cmd_train_cbm(config: RunConfig) -> dict:
    out = _out(config)
    train = artifacts.load_binary(out / PREPARED["train_binary"])
    test = artifacts.load_binary(out / PREPARED["test_binary"])
    params, readout, rep = rbm.train_cbm(train, config.cbm, test)
    digest = artifacts.save_cbm(out / "cbm_model.qxa", params, readout, config.to_dict()["cbm"])
    report = {
        "model": "CBM",
        "reconstruction_history": rep.reconstruction_history,
        "readout_loss_history": rep.readout_loss_history,
        "final_train_accuracy": rep.final_train_accuracy,
        "final_test_accuracy": rep.final_test_accuracy,
        "seed": rep.seed,
        "hyperparameters": rep.hyperparameters,
        "artifact_hash": digest,
    }
    _write_json(out / "cbm_report.json", report)
    log.info("CBM test accuracy %.4f", rep.final_test_accuracy)
    return report


def cmd_explain(config: RunConfig) -> dict:
    out = _out(config)
    model = artifacts.load_qbm(out / "qbm_model.qxa")
    params, readout = artifacts.load_cbm(out / "cbm_model.qxa")
    _, test = _qbm_inputs(config, out)
    train_b = artifacts.load_binary(out / PREPARED["train_binary"])
    test_b = artifacts.load_binary(out / PREPARED["test_binary"])

    q_rep = xai.qbm_saliency(model, test)
    c_rep = xai.cbm_attribution(params, readout, test_b, train_b.bits.mean(axis=0))
    comparison = xai.compare(q_rep, c_rep)
    (out / "attribution.csv").write_text(xai.to_csv([q_rep, c_rep]))
    report = {
        "qbm": q_rep.to_dict(),
        "cbm": c_rep.to_dict(),
        "comparison": comparison.to_dict(),
        "n_samples": len(test),
        "shapley_baseline": train_b.bits.mean(axis=0).tolist(),
    }
    _write_json(out / "attribution.json", report)
    log.info("entropy QBM %.4f, CBM %.4f", q_rep.entropy_nats, c_rep.entropy_nats)
    degenerate = [r.model_tag for r in (q_rep, c_rep) if r.degenerate]
    if degenerate:
        raise DegenerateAttribution(f"all-zero attribution for {', '.join(degenerate)}")
    return report


def cmd_tsne(config: RunConfig) -> dict:
    out = _out(config)
    model = artifacts.load_qbm(out / "qbm_model.qxa")
    _, test = _qbm_inputs(config, out)
    states = embed.latent_states(model, test)
    emb = embed.tsne(states, config.tsne)
    score = embed.silhouette(emb.points, test.labels)

    with open(out / "tsne_embedding.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "x", "y", "label"])
        for i, ((x, y), label) in enumerate(zip(emb.points, test.labels)):
            writer.writerow([i, repr(float(x)), repr(float(y)), int(label)])
    with open(out / "tsne_kl.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "kl"])
        writer.writerows([i, repr(kl)] for i, kl in enumerate(emb.kl_history))
    report = {
        "n_points": int(states.shape[0]),
        "silhouette": score,
        "latent_silhouette": embed.silhouette(states, test.labels),
        "final_kl": emb.kl_history[-1] if emb.kl_history else None,
        "config": emb.config,
    }
    _write_json(out / "tsne.json", report)
    log.info("t-SNE silhouette %.4f", score)
    return report


STAGES = {
    "prepare": cmd_prepare,
    "train-qbm": cmd_train_qbm,
    "train-cbm": cmd_train_cbm,
    "explain": cmd_explain,
    "tsne": cmd_tsne,
}

REPORTED_FILES = [
    *PREPARED.values(),
    "qbm_model.qxa",
    "cbm_model.qxa",
    "attribution.csv",
    "tsne_embedding.csv",
    "tsne_kl.csv",
]


def cmd_run_all(config: RunConfig) -> dict:
    """All stages in order; wall-clock timings go to timings.json, not the report."""
    out = _out(config)
    results, timings = {}, {}
    for name, stage in STAGES.items():
        start = time.perf_counter()
        results[name] = stage(config)
        timings[name] = time.perf_counter() - start
    report = {
        "model_names": {"QBM": "quantum Boltzmann machine (variational quantum classifier)",
                        "CBM": "classical restricted Boltzmann machine + logistic head"},
        "accuracies": {
            "qbm": results["train-qbm"]["final_test_accuracy"],
            "cbm": results["train-cbm"]["final_test_accuracy"],
        },
        "train_accuracies": {
            "qbm": results["train-qbm"]["final_train_accuracy"],
            "cbm": results["train-cbm"]["final_train_accuracy"],
        },
        "entropies": {
            "qbm": results["explain"]["qbm"]["entropy_nats"],
            "cbm": results["explain"]["cbm"]["entropy_nats"],
        },
        "attributions": {"qbm": results["explain"]["qbm"], "cbm": results["explain"]["cbm"]},
        "comparison": results["explain"]["comparison"],
        "silhouette": results["tsne"]["silhouette"],
        "tsne": {k: results["tsne"][k] for k in ("n_points", "final_kl", "latent_silhouette")},
        "data": {k: results["prepare"][k] for k in
                 ("split_mode", "split_seed", "n_train", "n_test", "train_class_counts", "test_class_counts")},
        "config": {k: v for k, v in config.to_dict().items() if k != "out"},
        "artifact_hashes": {name: artifacts.file_hash(out / name) for name in REPORTED_FILES},
        "format_version": artifacts.FORMAT_VERSION,
    }
    _write_json(out / "run_report.json", report)
    _write_json(out / "timings.json", {"seconds_per_stage": timings})
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbm-xai", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--train-images")
    common.add_argument("--train-labels")
    common.add_argument("--test-images")
    common.add_argument("--test-labels")
    common.add_argument("--out")
    common.add_argument("--seed", type=int)
    common.add_argument("--epochs", type=int, help="epochs for both models")
    common.add_argument("--lr", type=float, help="learning rate for both models")
    common.add_argument("--batch-size", type=int, help="mini-batch size for both models (0 = full batch)")
    common.add_argument("--layers", type=int, help="strongly entangling layers in the QBM circuit")
    common.add_argument("--perplexity", type=float)
    common.add_argument("--max-train", type=int, help="seeded subsample of the filtered training set")
    common.add_argument("--max-test", type=int)
    common.add_argument("--qbm-binary-input", action="store_true", default=None,
                        help="feed median-binarized features to the QBM instead of continuous ones")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in [*STAGES, "run-all"]:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    d = config.data
    for flag, attr in (("train_images", "train_images"), ("train_labels", "train_labels"),
                       ("test_images", "test_images"), ("test_labels", "test_labels"),
                       ("max_train", "max_train"), ("max_test", "max_test"),
                       ("qbm_binary_input", "qbm_binary_input")):
        if getattr(args, flag) is not None:
            setattr(d, attr, getattr(args, flag))
    if args.out is not None:
        config.out = args.out
    if args.seed is not None:
        config.seed = args.seed
    for section in (config.qbm, config.cbm):
        if args.epochs is not None:
            section.epochs = args.epochs
        if args.lr is not None:
            section.lr = args.lr
        if args.batch_size is not None:
            section.batch_size = args.batch_size or None
    if args.layers is not None:
        config.qbm.layers = args.layers
    if args.perplexity is not None:
        config.tsne.perplexity = args.perplexity
    config.sync_seeds()
    config.validate()
    return config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        command = cmd_run_all if args.command == "run-all" else STAGES[args.command]
        result = command(config)
    except QbmXaiError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "run-all":
        print(json.dumps({k: result[k] for k in ("accuracies", "entropies", "silhouette")}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
