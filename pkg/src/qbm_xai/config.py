"""Run configuration: JSON file + command-line overrides, echoed in every report."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .embed import TsneConfig
from .errors import IoFailure
from .qbm import QbmConfig
from .rbm import CbmConfig


@dataclass
class DataConfig:
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None  # omit both test paths to split the training file
    test_labels: str | None = None
    train_fraction: float = 0.8
    max_train: int | None = None  # seeded subsample after filtering
    max_test: int | None = None
    pca_k: int = 4
    qbm_binary_input: bool = False


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    qbm: QbmConfig = field(default_factory=QbmConfig)
    cbm: CbmConfig = field(default_factory=CbmConfig)
    tsne: TsneConfig = field(default_factory=TsneConfig)
    seed: int = 0
    out: str = "runs/default"

    def __post_init__(self):
        self.sync_seeds()

    def sync_seeds(self):
        """Every stage draws named sub-streams from the one root seed."""
        self.qbm.seed = self.cbm.seed = self.tsne.seed = self.seed

    def validate(self):
        for name, cfg in (("qbm", self.qbm), ("cbm", self.cbm)):
            if cfg.epochs < 0:
                raise ValueError(f"{name}.epochs must be >= 0")
            if not cfg.lr > 0:
                raise ValueError(f"{name}.lr must be > 0")
        if self.data.pca_k < 1:
            raise ValueError("pca_k must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        sections = {"data": DataConfig, "qbm": QbmConfig, "cbm": CbmConfig, "tsne": TsneConfig}
        kwargs = {}
        for key, value in raw.items():
            if key in sections:
                known = {f.name for f in fields(sections[key])}
                unknown = set(value) - known
                if unknown:
                    raise ValueError(f"unknown {key} option(s): {sorted(unknown)}")
                kwargs[key] = sections[key](**value)
            elif key in ("seed", "out"):
                kwargs[key] = value
            else:
                raise ValueError(f"unknown config key {key!r}")
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise IoFailure(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)
