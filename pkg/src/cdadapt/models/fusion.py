"""Multi-scale feature fusion: project each scale, upsample, merge at scale 4."""

from __future__ import annotations

import torch
from torch import nn

from ..config import ENCODER_SCALES, ModelConfig
from .layers import ChannelLayerNorm, FeatureMap


def _upsampler(channels: int, doublings: int) -> nn.Module:
    # bias-free so a zero map stays zero through the upsampling stack; the
    # merge conv + norm after concatenation carry the affine terms
    layers: list[nn.Module] = []
    for _ in range(doublings):
        layers += [
            nn.ConvTranspose2d(channels, channels, kernel_size=2, stride=2, bias=False),
            nn.GELU(),
        ]
    return nn.Sequential(*layers) if layers else nn.Identity()


class MultiScaleFusion(nn.Module):
    """Late fusion of the per-scale temporal-fused maps into one scale-4 map."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        branch_c = config.fused_channels // 4
        self.laterals = nn.ModuleList(
            [nn.Conv2d(w, branch_c, kernel_size=1, bias=False) for w in config.encoder_widths]
        )
        self.upsamplers = nn.ModuleList(
            [_upsampler(branch_c, doublings=i) for i in range(len(ENCODER_SCALES))]
        )
        self.merge = nn.Conv2d(branch_c * 4, config.fused_channels, kernel_size=3, padding=1)
        self.norm = ChannelLayerNorm(config.fused_channels)
        self.act = nn.GELU()

    def forward(self, fused_per_scale: list[FeatureMap]) -> FeatureMap:
        scales = [f.scale for f in fused_per_scale]
        if scales != list(ENCODER_SCALES):
            raise ValueError(f"expected maps at scales {ENCODER_SCALES}, got {scales}")
        branches = [
            up(lat(f.data))
            for f, lat, up in zip(fused_per_scale, self.laterals, self.upsamplers)
        ]
        merged = self.act(self.norm(self.merge(torch.cat(branches, dim=1))))
        return FeatureMap(data=merged, scale=ENCODER_SCALES[0])
