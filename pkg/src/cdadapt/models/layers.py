"""Shared building blocks for the segmentation network."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass
class FeatureMap:
    """A batched feature tensor (B, C, H, W) tagged with its downsampling factor."""

    data: torch.Tensor
    scale: int


class ChannelLayerNorm(nn.Module):
    """LayerNorm over the channel dim of a (B, C, H, W) map, per spatial position.

    Deterministic in eval and train (no running stats), so training batches of
    any composition leave inference untouched.
    """

    def __init__(self, channels: int, eps: float = 1e-6):
        super().__init__()
        self.weight = nn.Parameter(torch.ones(channels))
        self.bias = nn.Parameter(torch.zeros(channels))
        self.eps = eps

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        mu = x.mean(dim=1, keepdim=True)
        var = x.var(dim=1, keepdim=True, unbiased=False)
        x = (x - mu) / torch.sqrt(var + self.eps)
        return x * self.weight[None, :, None, None] + self.bias[None, :, None, None]


class ConvBlock(nn.Module):
    """Depthwise 7x7 conv, per-position norm, 4x pointwise MLP, residual."""

    def __init__(self, channels: int, expansion: int = 4):
        super().__init__()
        self.dw = nn.Conv2d(channels, channels, kernel_size=7, padding=3, groups=channels)
        self.norm = ChannelLayerNorm(channels)
        self.pw1 = nn.Conv2d(channels, channels * expansion, kernel_size=1)
        self.act = nn.GELU()
        self.pw2 = nn.Conv2d(channels * expansion, channels, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = self.dw(x)
        y = self.norm(y)
        y = self.pw2(self.act(self.pw1(y)))
        return x + y
