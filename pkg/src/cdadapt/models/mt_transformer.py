"""Temporal fusion of two same-scale feature maps with windowed attention.

Change-feature tokens form the queries; the keys and values come from both
temporal streams, concatenated along the token axis inside each local window,
so every query attends over the union of the two frames' tokens. A learnable
spatio-temporal position embedding (per-window-position + per-window + a
temporal term per stream) is added to the queries and keys.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .layers import FeatureMap

TEMPORAL_KEYS = ("f", "1", "2")


@dataclass(frozen=True)
class WindowGrid:
    """Partition of an h x w map into an hn x wn grid of wh x ww windows."""

    wh: int
    ww: int
    hn: int
    wn: int

    def __post_init__(self):
        if self.wh < 1 or self.ww < 1 or self.hn < 1 or self.wn < 1:
            raise ValueError("window grid dims must be >= 1")

    @property
    def h(self) -> int:
        return self.hn * self.wh

    @property
    def w(self) -> int:
        return self.wn * self.ww

    @classmethod
    def for_map(cls, h: int, w: int, window: int) -> "WindowGrid":
        wh = min(window, h)
        ww = min(window, w)
        if h % wh or w % ww:
            raise ValueError(f"map {h}x{w} not divisible into {wh}x{ww} windows")
        return cls(wh=wh, ww=ww, hn=h // wh, wn=w // ww)


def window_partition(x: torch.Tensor, grid: WindowGrid) -> torch.Tensor:
    """(B, H, W, C) -> (B, hn, wn, wh, ww, C)."""
    b, h, w, c = x.shape
    if h != grid.h or w != grid.w:
        raise ValueError(f"tokens {h}x{w} inconsistent with grid {grid.h}x{grid.w}")
    x = x.view(b, grid.hn, grid.wh, grid.wn, grid.ww, c)
    return x.permute(0, 1, 3, 2, 4, 5).contiguous()


def window_merge(x: torch.Tensor, grid: WindowGrid) -> torch.Tensor:
    """(B, hn, wn, wh, ww, C) -> (B, H, W, C)."""
    b = x.shape[0]
    x = x.permute(0, 1, 3, 2, 4, 5).contiguous()
    return x.view(b, grid.h, grid.w, x.shape[-1])


class STPETables(nn.Module):
    """Learnable window-local, window-grid, and temporal position embeddings."""

    def __init__(self, grid: WindowGrid, channels: int, init_std: float = 0.02):
        super().__init__()
        self.p_window = nn.Parameter(torch.empty(1, 1, grid.wh, grid.ww, channels))
        self.p_global = nn.Parameter(torch.empty(grid.hn, grid.wn, 1, 1, channels))
        self.p_temporal = nn.ParameterDict(
            {k: nn.Parameter(torch.empty(1, 1, 1, 1, channels)) for k in TEMPORAL_KEYS}
        )
        for p in [self.p_window, self.p_global, *self.p_temporal.values()]:
            nn.init.trunc_normal_(p, std=init_std)

    def embedding(self, temporal_key: str) -> torch.Tensor:
        return self.p_window + self.p_global + self.p_temporal[temporal_key]


def apply_stpe(
    q_star: torch.Tensor,
    v1: torch.Tensor,
    v2: torch.Tensor,
    stpe: STPETables,
    grid: WindowGrid,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Add position embeddings to windowed tokens (B, hn, wn, wh, ww, C).

    Queries take the change-stream temporal term; each key stream takes its own.
    Values stay unembedded.
    """
    for name, t in (("q_star", q_star), ("v1", v1), ("v2", v2)):
        if t.shape[1:5] != (grid.hn, grid.wn, grid.wh, grid.ww):
            raise ValueError(f"{name} token shape {tuple(t.shape)} inconsistent with grid {grid}")
    q = q_star + stpe.embedding("f")
    k1 = v1 + stpe.embedding("1")
    k2 = v2 + stpe.embedding("2")
    return q, k1, k2


class MTTransformerFusion(nn.Module):
    """Fuse two temporal feature maps of a fixed size into one, shape-preserving."""

    def __init__(self, channels: int, h: int, w: int, window: int = 8, heads: int = 1, init_std: float = 0.02):
        super().__init__()
        if channels % heads:
            raise ValueError(f"channels {channels} not divisible by heads {heads}")
        self.grid = WindowGrid.for_map(h, w, window)
        self.heads = heads
        self.pre_norm = nn.LayerNorm(channels)
        self.linear_q = nn.Linear(channels, channels)
        self.linear_v = nn.Linear(channels, channels)
        self.linear_a = nn.Linear(channels, channels)
        self.post_norm = nn.LayerNorm(channels)
        self.stpe = STPETables(self.grid, channels, init_std=init_std)

    @staticmethod
    def change_feature(x1n: torch.Tensor, x2n: torch.Tensor) -> torch.Tensor:
        """Symmetric change descriptor of two normalized maps: |x1' - x2'|."""
        if x1n.shape != x2n.shape:
            raise ValueError(f"shape mismatch: {x1n.shape} vs {x2n.shape}")
        return (x1n - x2n).abs()

    def _window_tokens(self, x: torch.Tensor) -> torch.Tensor:
        b, hn, wn, wh, ww, c = x.shape
        return x.view(b, hn, wn, wh * ww, self.heads, c // self.heads)

    def forward(
        self, x1: torch.Tensor, x2: torch.Tensor, return_attn: bool = False
    ) -> torch.Tensor | tuple[torch.Tensor, torch.Tensor]:
        """(B, C, H, W) x2 -> (B, C, H, W); optionally also the attention weights."""
        if x1.shape != x2.shape:
            raise ValueError(f"temporal shapes differ: {x1.shape} vs {x2.shape}")
        b, c, h, w = x1.shape
        if (h, w) != (self.grid.h, self.grid.w):
            raise ValueError(f"map {h}x{w} does not match the configured grid {self.grid.h}x{self.grid.w}")

        t1 = x1.permute(0, 2, 3, 1)
        t2 = x2.permute(0, 2, 3, 1)
        x1n = self.pre_norm(t1)
        x2n = self.pre_norm(t2)
        f = self.change_feature(x1n, x2n)

        q_star = window_partition(self.linear_q(f), self.grid)
        v1 = window_partition(self.linear_v(x1n), self.grid)
        v2 = window_partition(self.linear_v(x2n), self.grid)
        q, k1, k2 = apply_stpe(q_star, v1, v2, self.stpe, self.grid)

        # (B, hn, wn, T, heads, hd) with T tokens per window
        qh = self._window_tokens(q)
        kh = torch.cat([self._window_tokens(k1), self._window_tokens(k2)], dim=3)
        vh = torch.cat([self._window_tokens(v1), self._window_tokens(v2)], dim=3)

        scale = (c // self.heads) ** -0.5
        logits = torch.einsum("bnmqhd,bnmkhd->bnmhqk", qh * scale, kh)
        attn = logits.softmax(dim=-1)
        out = torch.einsum("bnmhqk,bnmkhd->bnmqhd", attn, vh)
        out = out.reshape(b, self.grid.hn, self.grid.wn, self.grid.wh, self.grid.ww, c)
        out = window_merge(out, self.grid)

        fused = self.linear_a(self.post_norm(out)) + out
        fused = fused.permute(0, 3, 1, 2).contiguous()
        if return_attn:
            return fused, attn
        return fused


def mt_fuse(x1: FeatureMap, x2: FeatureMap, fusion: MTTransformerFusion) -> FeatureMap:
    if x1.scale != x2.scale:
        raise ValueError(f"scale mismatch: {x1.scale} vs {x2.scale}")
    return FeatureMap(data=fusion(x1.data, x2.data), scale=x1.scale)
