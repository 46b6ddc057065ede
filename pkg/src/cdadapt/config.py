"""Run configuration: model sizing, training schedules, and trainable-group presets.

Every config object is a frozen dataclass that serializes to plain JSON, so a
single hash can be embedded in checkpoints and logs and verified on reload.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

ENCODER_SCALES = (4, 8, 16, 32)

CONFIG_ENV_VAR = "DAMNET_CONFIG"


@dataclass(frozen=True)
class ModelConfig:
    """Architecture knobs for the segmentation network and discriminator."""

    input_size: int = 256
    in_channels: int = 3
    encoder_widths: tuple[int, int, int, int] = (32, 64, 128, 256)
    blocks_per_stage: int = 1
    encoder_attention: bool = True
    window: int = 8
    attn_heads: int = 1
    fused_channels: int = 128
    cx_blocks: int = 3
    disc_layers: int = 4
    disc_base: int = 64
    stpe_init_std: float = 0.02

    def __post_init__(self):
        if self.input_size % 32 != 0:
            raise ValueError(f"input_size must be divisible by 32, got {self.input_size}")
        if len(self.encoder_widths) != 4:
            raise ValueError("encoder_widths must list exactly 4 stage widths")
        if self.fused_channels % 4 != 0:
            raise ValueError("fused_channels must be divisible by 4")
        if self.window < 1 or self.window & (self.window - 1):
            raise ValueError("window must be a positive power of two")


# Preset name -> (train_mt_fusion, train_ms_fusion, train_head)
FREEZE_PRESETS = {
    "a100": (True, False, False),
    "a010": (False, True, False),
    "a001": (False, False, True),
    "a111": (True, True, True),
    "a110": (True, True, False),
}


@dataclass(frozen=True)
class FreezeConfig:
    """Which parameter groups the adversarial segmentation step may update."""

    train_mt_fusion: bool = True
    train_ms_fusion: bool = True
    train_head: bool = False
    train_encoder: bool = False

    def __post_init__(self):
        if not (self.train_mt_fusion or self.train_ms_fusion or self.train_head or self.train_encoder):
            raise ValueError("at least one parameter group must be trainable")

    @classmethod
    def from_preset(cls, name: str) -> "FreezeConfig":
        if name not in FREEZE_PRESETS:
            raise ValueError(f"unknown preset {name!r}; choose one of {sorted(FREEZE_PRESETS)}")
        mt, ms, head = FREEZE_PRESETS[name]
        return cls(train_mt_fusion=mt, train_ms_fusion=ms, train_head=head)

    @property
    def preset_name(self) -> str | None:
        for name, (mt, ms, head) in FREEZE_PRESETS.items():
            if (mt, ms, head) == (self.train_mt_fusion, self.train_ms_fusion, self.train_head) \
                    and not self.train_encoder:
                return name
        return None

    def group_names(self) -> list[str]:
        names = []
        if self.train_encoder:
            names.append("encoder")
        if self.train_mt_fusion:
            names.append("mt_fusion")
        if self.train_ms_fusion:
            names.append("ms_fusion")
        if self.train_head:
            names.append("head")
        return names


@dataclass(frozen=True)
class AdaSchedule:
    """Optimizer schedule for the alternating adaptation loop."""

    lr: float = 1e-5
    lr_decay: float = 0.8
    decay_every: int = 5
    epochs: int = 100
    batch_step1: int = 16
    batch_step23_per_domain: int = 16

    def __post_init__(self):
        for name in ("lr", "lr_decay", "decay_every", "epochs", "batch_step1", "batch_step23_per_domain"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def lr_at(self, epoch: int) -> float:
        return self.lr * self.lr_decay ** (epoch // self.decay_every)


@dataclass(frozen=True)
class MlftSchedule:
    """Optimizer schedule for micro-labeled fine-tuning."""

    lr: float = 5e-6
    lr_decay: float = 0.8
    decay_every: int = 5
    epochs: int = 100

    def __post_init__(self):
        for name in ("lr", "lr_decay", "decay_every", "epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def lr_at(self, epoch: int) -> float:
        return self.lr * self.lr_decay ** (epoch // self.decay_every)


@dataclass(frozen=True)
class MlftBatchSpec:
    """Composition of one fine-tuning batch.

    The perturbed count is bookkeeping, not an independent draw: each unlabeled
    sample contributes one feature-perturbed and one image-perturbed view.
    """

    n_unlabeled_tgt: int = 15
    n_perturbed: int = 30
    n_labeled_tgt: int = 1
    n_labeled_src: int = 15

    def __post_init__(self):
        if self.n_perturbed != 2 * self.n_unlabeled_tgt:
            raise ValueError("n_perturbed must equal 2 * n_unlabeled_tgt (one feature view + one image view)")
        for name in ("n_unlabeled_tgt", "n_labeled_tgt", "n_labeled_src"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def total(self) -> int:
        return self.n_unlabeled_tgt + self.n_perturbed + self.n_labeled_tgt + self.n_labeled_src


@dataclass(frozen=True)
class LossWeights:
    """Coefficients of the fine-tuning objective (consistency, source, micro-label)."""

    alpha: float = 30 / 46
    beta: float = 1 / 46
    gamma: float = 15 / 46

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and self.gamma > 0):
            raise ValueError("loss weights must all be positive")


@dataclass(frozen=True)
class RunConfig:
    """Everything a training or evaluation command needs, in one hashable bundle."""

    seed: int = 0
    device: str = "cpu"
    model: ModelConfig = field(default_factory=ModelConfig)
    freeze: FreezeConfig = field(default_factory=FreezeConfig)
    ada: AdaSchedule = field(default_factory=AdaSchedule)
    mlft: MlftSchedule = field(default_factory=MlftSchedule)
    mlft_batch: MlftBatchSpec = field(default_factory=MlftBatchSpec)
    weights: LossWeights = field(default_factory=LossWeights)
    source_epochs: int = 30
    source_lr: float = 1e-3
    source_batch: int = 16
    conf_threshold: float = 0.95
    fp_rate: float = 0.5
    select_k: int = 16
    min_change_frac: float = 0.005

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        for key, sub in (
            ("model", ModelConfig),
            ("freeze", FreezeConfig),
            ("ada", AdaSchedule),
            ("mlft", MlftSchedule),
            ("mlft_batch", MlftBatchSpec),
            ("weights", LossWeights),
        ):
            if key in data and isinstance(data[key], dict):
                data[key] = sub(**_tuplify(sub, data[key]))
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def from_env_or_default(cls) -> "RunConfig":
        path = os.environ.get(CONFIG_ENV_VAR)
        if path:
            return cls.from_file(path)
        return cls()

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def _tuplify(cls, data: dict) -> dict:
    """JSON round-trips tuples as lists; restore tuple-typed fields."""
    out = dict(data)
    for f in dataclasses.fields(cls):
        if f.name in out and isinstance(out[f.name], list):
            out[f.name] = tuple(out[f.name])
    return out
