"""Deterministic batch assembly.

Sample order for a fixed (seed, stream, epoch) key is a pure function, so loss
traces reproduce bit-for-bit and resuming from an epoch boundary replays the
remaining schedule exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import torch

from ..data.pairs import ImagePair


def stream_key(seed: int, stream: str, epoch: int) -> list[int]:
    digest = hashlib.blake2s(stream.encode(), digest_size=8).digest()
    return [seed & 0xFFFFFFFF, int.from_bytes(digest, "big") & 0xFFFFFFFF, epoch]


def epoch_order(n: int, seed: int, stream: str, epoch: int) -> np.ndarray:
    return np.random.default_rng(stream_key(seed, stream, epoch)).permutation(n)


@dataclass
class DomainBatch:
    """A training batch with per-sample domain labels and mask availability."""

    pairs: list[ImagePair]

    @property
    def domain_labels(self) -> list[str]:
        return [p.domain for p in self.pairs]

    @property
    def has_mask(self) -> list[bool]:
        return [p.mask is not None for p in self.pairs]

    def tensors(self, device: str = "cpu") -> tuple[torch.Tensor, torch.Tensor, torch.Tensor | None]:
        """Stack to (t1, t2, masks); masks is None when any sample is unlabeled."""
        t1 = torch.stack([torch.from_numpy(p.t1).permute(2, 0, 1) for p in self.pairs]).to(device)
        t2 = torch.stack([torch.from_numpy(p.t2).permute(2, 0, 1) for p in self.pairs]).to(device)
        if all(self.has_mask):
            masks = torch.stack(
                [torch.from_numpy(p.mask.astype(np.float32)) for p in self.pairs]
            ).to(device)
        else:
            masks = None
        return t1, t2, masks

    def __len__(self) -> int:
        return len(self.pairs)


def batches_for_epoch(
    dataset: list[ImagePair], batch_size: int, seed: int, stream: str, epoch: int
) -> list[DomainBatch]:
    """Full batches in shuffled order; a dataset smaller than one batch yields itself."""
    if not dataset:
        raise ValueError("empty dataset")
    order = epoch_order(len(dataset), seed, stream, epoch)
    if len(dataset) < batch_size:
        return [DomainBatch(pairs=[dataset[i] for i in order])]
    n_batches = len(dataset) // batch_size
    return [
        DomainBatch(pairs=[dataset[i] for i in order[b * batch_size : (b + 1) * batch_size]])
        for b in range(n_batches)
    ]
