"""Run configuration: one file fully specifies a reproducible pipeline run.

Flat key=value text with ``[section]`` headers (configparser syntax).
Command-line flags override file values; the resolved configuration is
persisted next to the run outputs so any run can be re-executed bit-exactly
from its own artifact directory.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace

from .data import Dataset, SplitSpec, load_csv, load_idx, split, synth_blobs, synth_textures
from .evaluate import EvalConfig
from .layers import ModelSpec, miniresnet_spec, mlp_spec
from .optim import OptimizerConfig
from .train import TrainConfig

DATASET_KINDS = ("blobs", "textures", "csv", "idx")


@dataclass(frozen=True)
class DatasetSection:
    kind: str = "blobs"
    n: int = 5000
    classes: int = 4
    overlap: float = 0.4      # blobs
    dim: int = 2              # blobs
    noise: float = 0.0        # textures
    size: int = 16            # textures
    csv_path: str = ""        # kind = csv
    images_path: str = ""     # kind = idx
    labels_path: str = ""     # kind = idx
    label_column: str = "label"
    train_frac: float = 0.7
    val_frac: float = 0.15
    test_frac: float = 0.15


@dataclass(frozen=True)
class ModelSection:
    backbone: str = "mlp"     # mlp | miniresnet
    variant: str = "baseline"
    dropout: float = 0.5
    hidden: int = 64          # mlp width


@dataclass(frozen=True)
class TrainingSection:
    optimizer: str = "adam"   # adam | sgd-momentum
    lr: float = 1e-3
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    epochs: int = 20
    batch_size: int = 64
    beta: float = 1.0         # KLD weight


@dataclass(frozen=True)
class UncertaintySection:
    T: int = 100
    S: int = 100
    space: str = "analytic"   # variational scoring space
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out: str = "runs/out"
    dataset: DatasetSection = field(default_factory=DatasetSection)
    model: ModelSection = field(default_factory=ModelSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    uncertainty: UncertaintySection = field(default_factory=UncertaintySection)

    # -- serialization ------------------------------------------------------

    def to_text(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str  # keep key case (uncertainty.T)
        cp["run"] = {"seed": str(self.seed), "out": self.out}
        for name, section in (("dataset", self.dataset), ("model", self.model),
                              ("training", self.training), ("uncertainty", self.uncertainty)):
            cp[name] = {f.name: _dump(getattr(section, f.name)) for f in fields(section)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def to_file(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as e:
            raise ValueError(f"malformed config: {e}") from e
        cfg = cls()
        overrides: dict[str, dict[str, str]] = {}
        known = {"run", "dataset", "model", "training", "uncertainty"}
        for section in cp.sections():
            if section not in known:
                raise ValueError(f"unknown config section [{section}]")
            overrides[section] = dict(cp[section])
        return cfg.with_overrides(overrides)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def with_overrides(self, overrides: dict[str, dict[str, str]]) -> "RunConfig":
        """Apply string-valued per-section overrides (file keys or CLI flags)."""
        cfg = self
        for section, values in overrides.items():
            if not values:
                continue
            if section == "run":
                for key, raw in values.items():
                    if key == "seed":
                        cfg = replace(cfg, seed=_parse(int, "run", "seed", raw))
                    elif key == "out":
                        cfg = replace(cfg, out=str(raw))
                    else:
                        raise ValueError(f"unknown config key run.{key}")
                continue
            current = getattr(cfg, section)
            by_name = {f.name: f for f in fields(current)}
            updates = {}
            for key, raw in values.items():
                if key not in by_name:
                    raise ValueError(f"unknown config key {section}.{key}")
                typ = type(getattr(current, key))
                updates[key] = _parse(typ, section, key, raw)
            cfg = replace(cfg, **{section: replace(current, **updates)})
        cfg.validate()
        return cfg

    # -- validation and factories -------------------------------------------

    def validate(self) -> None:
        d = self.dataset
        if d.kind not in DATASET_KINDS:
            raise ValueError(f"dataset.kind must be one of {DATASET_KINDS}, got {d.kind!r}")
        if not (0.0 <= d.overlap <= 1.0):
            raise ValueError(f"dataset.overlap must lie in [0, 1], got {d.overlap}")
        if d.noise < 0:
            raise ValueError("dataset.noise must be nonnegative")
        if self.model.backbone not in ("mlp", "miniresnet"):
            raise ValueError(f"model.backbone must be mlp or miniresnet, got {self.model.backbone!r}")
        if not (0.0 <= self.model.dropout < 1.0):
            raise ValueError(f"model.dropout must lie in [0, 1), got {self.model.dropout}")
        if self.uncertainty.T < 2:
            raise ValueError(f"uncertainty.T must be >= 2, got {self.uncertainty.T}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def make_dataset(self) -> Dataset:
        d = self.dataset
        if d.kind == "blobs":
            return synth_blobs(d.n, d.classes, d.overlap, d.dim, self.seed)
        if d.kind == "textures":
            return synth_textures(d.n, d.classes, d.size, d.noise, self.seed)
        if d.kind == "csv":
            if not d.csv_path:
                raise ValueError("dataset.csv_path is required for kind = csv")
            return load_csv(d.csv_path, d.label_column)
        if not (d.images_path and d.labels_path):
            raise ValueError("dataset.images_path and dataset.labels_path are required for kind = idx")
        return load_idx(d.images_path, d.labels_path)

    def make_splits(self) -> tuple[Dataset, Dataset, Dataset]:
        d = self.dataset
        return split(self.make_dataset(),
                     SplitSpec(d.train_frac, d.val_frac, d.test_frac, seed=self.seed))

    def make_spec(self, input_shape: tuple[int, ...], variant: str | None = None) -> ModelSpec:
        m = self.model
        variant = variant or m.variant
        if m.backbone == "mlp":
            if len(input_shape) != 1:
                raise ValueError(f"mlp backbone needs vector inputs, got shape {input_shape}")
            return mlp_spec(input_shape[0], self.dataset.classes, variant, m.hidden, m.dropout)
        if len(input_shape) != 3:
            raise ValueError(f"miniresnet backbone needs image inputs, got shape {input_shape}")
        return miniresnet_spec(input_shape, self.dataset.classes, variant, m.dropout)

    def train_config(self) -> TrainConfig:
        t = self.training
        opt = OptimizerConfig(t.optimizer, t.lr, t.momentum, t.beta1, t.beta2)
        return TrainConfig(opt, t.epochs, t.batch_size, t.beta)

    def eval_config(self) -> EvalConfig:
        u = self.uncertainty
        return EvalConfig(u.T, u.S, self.seed, u.space, u.workers)


def _dump(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(typ, section: str, key: str, raw: str):
    raw = str(raw).strip()
    try:
        if typ is bool:
            return raw.lower() in ("1", "true", "yes")
        return typ(raw)
    except ValueError as e:
        raise ValueError(f"config key {section}.{key}: cannot parse {raw!r} as {typ.__name__}") from e
