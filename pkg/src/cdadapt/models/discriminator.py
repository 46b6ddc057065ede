"""Fully convolutional domain discriminator with a spatial (matrix) output.

Emits one logit per region of the input feature map instead of a single
scalar, so adversarial supervision is region-wise. Convention: logit > 0 means
"predicted source domain" (source=1, target=0 targets).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .layers import FeatureMap


@dataclass
class DiscriminatorOutput:
    logit_map: torch.Tensor  # (B, h', w')


class DomainDiscriminator(nn.Module):
    def __init__(self, in_channels: int, base: int = 64, layers: int = 4):
        super().__init__()
        if layers < 1:
            raise ValueError("need at least one downsampling layer")
        self.layers = layers
        convs: list[nn.Module] = []
        c_in = in_channels
        for i in range(layers):
            c_out = min(base * 2**i, 512)
            convs += [
                nn.Conv2d(c_in, c_out, kernel_size=4, stride=2, padding=1, bias=False),
                nn.LeakyReLU(0.2),
            ]
            c_in = c_out
        convs.append(nn.Conv2d(c_in, 1, kernel_size=3, stride=1, padding=1))
        self.net = nn.Sequential(*convs)

    @property
    def min_input(self) -> int:
        return 2**self.layers

    def forward(self, d_input: FeatureMap | torch.Tensor) -> DiscriminatorOutput:
        x = d_input.data if isinstance(d_input, FeatureMap) else d_input
        if min(x.shape[-2:]) < self.min_input:
            raise ValueError(
                f"input {x.shape[-2]}x{x.shape[-1]} smaller than the receptive field "
                f"({self.min_input}x{self.min_input} minimum for {self.layers} layers)"
            )
        return DiscriminatorOutput(logit_map=self.net(x).squeeze(1))
