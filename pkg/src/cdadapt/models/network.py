"""The full change-detection network and its checkpoint format.

The segmentation parameters split into four named groups (encoder, mt_fusion,
ms_fusion, head) that are disjoint and jointly exhaustive; trainers freeze and
update whole groups. Checkpoints store the groups keyed by name together with
the config hash, which is verified on load.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

import torch
from torch import nn

from ..config import ENCODER_SCALES, ModelConfig, RunConfig
from .discriminator import DomainDiscriminator
from .encoder import HierarchicalEncoder
from .fusion import MultiScaleFusion
from .head import ChangePrediction, PredictionHead
from .layers import FeatureMap
from .mt_transformer import MTTransformerFusion

PARTITION = ("encoder", "mt_fusion", "ms_fusion", "head")

CHECKPOINT_VERSION = 1


class ChangeDetector(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.encoder = HierarchicalEncoder(config)
        self.mt_fusion = nn.ModuleList(
            [
                MTTransformerFusion(
                    channels=width,
                    h=config.input_size // scale,
                    w=config.input_size // scale,
                    window=config.window,
                    heads=config.attn_heads,
                    init_std=config.stpe_init_std,
                )
                for width, scale in zip(config.encoder_widths, ENCODER_SCALES)
            ]
        )
        self.ms_fusion = MultiScaleFusion(config)
        self.head = PredictionHead(config)

    def encode(self, t1: torch.Tensor, t2: torch.Tensor) -> tuple[list[FeatureMap], list[FeatureMap]]:
        """Shared-weight encoding of both frames."""
        return self.encoder(t1), self.encoder(t2)

    def g_features(
        self, t1: torch.Tensor, t2: torch.Tensor, collect_change: list | None = None
    ) -> list[FeatureMap]:
        """Encoder + temporal fusion: per-scale fused maps."""
        f1, f2 = self.encode(t1, t2)
        fused = []
        for m1, m2, fuser in zip(f1, f2, self.mt_fusion):
            if collect_change is not None:
                x1n = fuser.pre_norm(m1.data.permute(0, 2, 3, 1))
                x2n = fuser.pre_norm(m2.data.permute(0, 2, 3, 1))
                collect_change.append(fuser.change_feature(x1n, x2n))
            fused.append(FeatureMap(data=fuser(m1.data, m2.data), scale=m1.scale))
        return fused

    def h_predict(self, fused_per_scale: list[FeatureMap]) -> ChangePrediction:
        """Multi-scale fusion + prediction head."""
        return self.head(self.ms_fusion(fused_per_scale))

    def forward(
        self, t1: torch.Tensor, t2: torch.Tensor, return_change_features: bool = False
    ) -> ChangePrediction | tuple[ChangePrediction, list[torch.Tensor]]:
        collect: list | None = [] if return_change_features else None
        pred = self.h_predict(self.g_features(t1, t2, collect_change=collect))
        if return_change_features:
            return pred, collect
        return pred

    def parameter_groups(self) -> dict[str, list[nn.Parameter]]:
        return {name: list(getattr(self, name).parameters()) for name in PARTITION}

    def group_param_counts(self) -> dict[str, int]:
        return {name: sum(p.numel() for p in ps) for name, ps in self.parameter_groups().items()}


def build_model(config: RunConfig) -> tuple[ChangeDetector, DomainDiscriminator]:
    """Deterministic construction: weights drawn from the run seed."""
    torch.manual_seed(config.seed)
    model = ChangeDetector(config.model)
    disc = DomainDiscriminator(
        in_channels=config.model.fused_channels,
        base=config.model.disc_base,
        layers=config.model.disc_layers,
    )
    return model, disc


def group_digest(params: list[nn.Parameter]) -> str:
    """Byte-level fingerprint of a parameter group; changes iff any value changes."""
    h = hashlib.sha256()
    for p in params:
        h.update(p.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


def save_checkpoint(
    path: str | Path,
    model: ChangeDetector,
    config: RunConfig,
    kind: str,
    epoch: int,
    disc: DomainDiscriminator | None = None,
    optimizer_states: dict | None = None,
    extra: dict | None = None,
) -> None:
    """Atomic write (temp file + rename) of all parameter groups plus metadata."""
    payload: dict = {
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "epoch": epoch,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "groups": {name: getattr(model, name).state_dict() for name in PARTITION},
    }
    if disc is not None:
        payload["discriminator"] = disc.state_dict()
    if optimizer_states:
        payload["optimizers"] = optimizer_states
    if extra:
        payload["extra"] = extra
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            torch.save(payload, fh)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def load_checkpoint(
    path: str | Path, expected_config: RunConfig | None = None
) -> tuple[ChangeDetector, DomainDiscriminator, RunConfig, dict]:
    """Rebuild model + discriminator from a checkpoint, verifying hashes and shapes.

    The stored full-config hash guards integrity. Against an expected config,
    only the architecture section must match: training phases legitimately
    chain one checkpoint into the next under different schedules.
    """
    payload = torch.load(path, map_location="cpu", weights_only=True)
    config = RunConfig.from_dict(payload["config"])
    if config.config_hash() != payload["config_hash"]:
        raise ValueError(f"checkpoint {path}: config hash mismatch (corrupt or edited config)")
    if expected_config is not None and expected_config.model != config.model:
        raise ValueError(
            f"checkpoint {path}: model architecture does not match the requested config"
        )
    model, disc = build_model(config)
    for name in PARTITION:
        module = getattr(model, name)
        saved = payload["groups"][name]
        own = module.state_dict()
        for key, tensor in saved.items():
            if key not in own or own[key].shape != tensor.shape:
                raise ValueError(f"checkpoint {path}: group {name} has unexpected entry {key}")
        module.load_state_dict(saved)
    if "discriminator" in payload:
        disc.load_state_dict(payload["discriminator"])
    return model, disc, config, payload
