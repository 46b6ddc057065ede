"""Prediction head: CX-Blocks on the fused map, then a decoder to full resolution.

The activation after the last CX-Block (before the decoder) is the deepest
pre-decoder representation; it doubles as the domain-discriminator input.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from ..config import ModelConfig
from .layers import ChannelLayerNorm, ConvBlock, FeatureMap


@dataclass
class ChangePrediction:
    """Output bundle: raw logits, probabilities, and the discriminator input."""

    logits: torch.Tensor  # (B, H, W)
    prob: torch.Tensor  # (B, H, W), sigmoid(logits)
    d_input: FeatureMap


class PredictionHead(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        c = config.fused_channels
        self.cx_blocks = nn.Sequential(*[ConvBlock(c) for _ in range(config.cx_blocks)])
        self.decoder = nn.Sequential(
            nn.ConvTranspose2d(c, c // 2, kernel_size=2, stride=2),
            ChannelLayerNorm(c // 2),
            nn.GELU(),
            nn.ConvTranspose2d(c // 2, c // 4, kernel_size=2, stride=2),
            ChannelLayerNorm(c // 4),
            nn.GELU(),
            nn.Conv2d(c // 4, 1, kernel_size=1),
        )

    def forward(self, fused: FeatureMap) -> ChangePrediction:
        if fused.scale != 4:
            raise ValueError(f"head expects a scale-4 map, got scale {fused.scale}")
        feat = self.cx_blocks(fused.data)
        logits = self.decoder(feat).squeeze(1)
        return ChangePrediction(
            logits=logits,
            prob=torch.sigmoid(logits),
            d_input=FeatureMap(data=feat, scale=fused.scale),
        )
