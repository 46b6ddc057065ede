"""Loss functions: hybrid segmentation loss and map-level domain BCE.

All binary cross entropies run on logits in the numerically stable form, so
every loss is finite for finite inputs.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

SOURCE_LABEL = 1.0
TARGET_LABEL = 0.0


def bce_logits(logits: torch.Tensor, targets: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
    """Mean BCE over all elements, or over mask-selected elements."""
    if mask is not None:
        if not mask.any():
            return logits.sum() * 0.0
        return F.binary_cross_entropy_with_logits(logits[mask], targets[mask])
    return F.binary_cross_entropy_with_logits(logits, targets)


def dice_loss(probs: torch.Tensor, targets: torch.Tensor, smooth: float = 1.0) -> torch.Tensor:
    """Soft Dice over the whole batch; zero when probs match targets exactly."""
    inter = (probs * targets).sum()
    return 1.0 - (2.0 * inter + smooth) / (probs.sum() + targets.sum() + smooth)


def seg_hybrid_loss(logits: torch.Tensor, masks: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Supervised change loss: equally weighted BCE + Dice. Returns (total, bce, dice)."""
    bce = bce_logits(logits, masks)
    dice = dice_loss(torch.sigmoid(logits), masks)
    return bce + dice, bce, dice


def domain_bce(logit_maps: torch.Tensor, domain_label: float) -> torch.Tensor:
    """Mean-cell BCE of a discriminator logit map against one domain label."""
    targets = torch.full_like(logit_maps, domain_label)
    return F.binary_cross_entropy_with_logits(logit_maps, targets)


def domain_bce_two_sided(
    src_logits: torch.Tensor, tgt_logits: torch.Tensor
) -> torch.Tensor:
    """Discriminator objective: every cell scored against its true domain label."""
    logits = torch.cat([src_logits.reshape(-1), tgt_logits.reshape(-1)])
    targets = torch.cat(
        [
            torch.full((src_logits.numel(),), SOURCE_LABEL, dtype=logits.dtype, device=logits.device),
            torch.full((tgt_logits.numel(),), TARGET_LABEL, dtype=logits.dtype, device=logits.device),
        ]
    )
    return F.binary_cross_entropy_with_logits(logits, targets)


def adversarial_bce(src_logits: torch.Tensor, tgt_logits: torch.Tensor) -> torch.Tensor:
    """Deception objective: every cell of both domains scored as source."""
    logits = torch.cat([src_logits.reshape(-1), tgt_logits.reshape(-1)])
    return F.binary_cross_entropy_with_logits(logits, torch.full_like(logits, SOURCE_LABEL))
