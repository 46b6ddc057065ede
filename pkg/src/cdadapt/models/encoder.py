"""Hierarchical siamese image encoder.

Four stages at downsampling factors 4/8/16/32 built from depthwise-conv blocks,
with an optional global self-attention block at the deepest stage. Not a
pretrained backbone: a load hook accepts external weights when available, and
at desk scale it trains from random init.
"""

from __future__ import annotations

import torch
from torch import nn

from ..config import ENCODER_SCALES, ModelConfig
from .layers import ChannelLayerNorm, ConvBlock, FeatureMap


class GlobalSelfAttention(nn.Module):
    """Single-stage token mixer over all spatial positions (small maps only)."""

    def __init__(self, channels: int, heads: int = 1):
        super().__init__()
        if channels % heads:
            raise ValueError("channels must divide by heads")
        self.heads = heads
        self.norm = nn.LayerNorm(channels)
        self.qkv = nn.Linear(channels, channels * 3)
        self.proj = nn.Linear(channels, channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c, h, w = x.shape
        tokens = x.permute(0, 2, 3, 1).reshape(b, h * w, c)
        y = self.norm(tokens)
        q, k, v = self.qkv(y).chunk(3, dim=-1)
        q = q.view(b, -1, self.heads, c // self.heads).transpose(1, 2)
        k = k.view(b, -1, self.heads, c // self.heads).transpose(1, 2)
        v = v.view(b, -1, self.heads, c // self.heads).transpose(1, 2)
        attn = (q @ k.transpose(-2, -1) * (c // self.heads) ** -0.5).softmax(dim=-1)
        y = (attn @ v).transpose(1, 2).reshape(b, h * w, c)
        tokens = tokens + self.proj(y)
        return tokens.reshape(b, h, w, c).permute(0, 3, 1, 2).contiguous()


class HierarchicalEncoder(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        w0, w1, w2, w3 = config.encoder_widths
        self.widths = config.encoder_widths
        self.stem = nn.Sequential(
            nn.Conv2d(config.in_channels, w0, kernel_size=4, stride=4),
            ChannelLayerNorm(w0),
        )
        self.stages = nn.ModuleList()
        self.downsamples = nn.ModuleList()
        widths = [w0, w1, w2, w3]
        for i, width in enumerate(widths):
            if i > 0:
                self.downsamples.append(
                    nn.Sequential(
                        ChannelLayerNorm(widths[i - 1]),
                        nn.Conv2d(widths[i - 1], width, kernel_size=2, stride=2),
                    )
                )
            blocks: list[nn.Module] = [ConvBlock(width) for _ in range(config.blocks_per_stage)]
            if i == len(widths) - 1 and config.encoder_attention:
                blocks.append(GlobalSelfAttention(width, heads=config.attn_heads))
            self.stages.append(nn.Sequential(*blocks))

    def forward(self, x: torch.Tensor) -> list[FeatureMap]:
        if x.shape[-1] % 32 or x.shape[-2] % 32:
            raise ValueError(
                f"input {x.shape[-2]}x{x.shape[-1]} not divisible by 32; pad or re-tile first"
            )
        maps = []
        y = self.stem(x)
        for i, stage in enumerate(self.stages):
            if i > 0:
                y = self.downsamples[i - 1](y)
            y = stage(y)
            maps.append(FeatureMap(data=y, scale=ENCODER_SCALES[i]))
        return maps

    def load_external_weights(self, path: str) -> None:
        """Load a pre-trained encoder state dict (strict shape match)."""
        state = torch.load(path, map_location="cpu", weights_only=True)
        self.load_state_dict(state)
