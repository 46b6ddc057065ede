import math

import numpy as np
import pytest
import torch

from cdadapt.training.losses import (
    adversarial_bce,
    bce_logits,
    dice_loss,
    domain_bce,
    domain_bce_two_sided,
    seg_hybrid_loss,
)

LN2 = math.log(2.0)


def oracle_bce(logits: np.ndarray, targets: np.ndarray) -> float:
    """Independent per-element BCE in float64 numpy."""
    p = 1.0 / (1.0 + np.exp(-logits.astype(np.float64)))
    y = targets.astype(np.float64)
    eps = 1e-300
    return float(np.mean(-(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))))


def test_bce_at_zero_logits_is_ln2():
    logits = torch.zeros(3, 8, 8)
    targets = (torch.rand(3, 8, 8) > 0.5).float()
    assert abs(float(bce_logits(logits, targets)) - LN2) < 1e-6


def test_bce_matches_per_pixel_oracle(rng):
    logits = torch.from_numpy(rng.normal(0, 2, (2, 6, 6)).astype(np.float32))
    targets = torch.from_numpy((rng.random((2, 6, 6)) > 0.5).astype(np.float32))
    ours = float(bce_logits(logits, targets))
    assert abs(ours - oracle_bce(logits.numpy(), targets.numpy())) < 1e-6


def test_bce_is_finite_for_extreme_logits():
    logits = torch.tensor([[1e4, -1e4], [500.0, -500.0]])
    targets = torch.tensor([[0.0, 1.0], [1.0, 0.0]])
    val = float(bce_logits(logits, targets))
    assert math.isfinite(val)


def test_masked_bce_empty_mask_is_zero():
    logits = torch.randn(2, 4, 4)
    targets = torch.zeros(2, 4, 4)
    assert float(bce_logits(logits, targets, torch.zeros(2, 4, 4, dtype=torch.bool))) == 0.0


def test_dice_zero_at_perfect_match():
    mask = (torch.rand(2, 8, 8) > 0.7).float()
    assert float(dice_loss(mask, mask)) < 1e-9


def test_hybrid_loss_perfect_prediction():
    mask = (torch.rand(1, 16, 16) > 0.8).float()
    logits = (mask * 2 - 1) * 30.0  # clamped-confident logits
    total, _, _ = seg_hybrid_loss(logits, mask)
    assert float(total) <= 1e-6


def test_hybrid_bce_term_at_half_is_ln2():
    mask = (torch.rand(1, 8, 8) > 0.5).float()
    _, bce, _ = seg_hybrid_loss(torch.zeros(1, 8, 8), mask)
    assert abs(float(bce) - LN2) < 1e-6


def test_domain_bce_limits():
    zeros = torch.zeros(2, 4, 4)
    assert abs(float(domain_bce(zeros, 1.0)) - LN2) < 1e-6
    assert abs(float(domain_bce_two_sided(zeros, zeros)) - LN2) < 1e-6
    assert abs(float(adversarial_bce(zeros, zeros)) - LN2) < 1e-6
    # perfectly separating discriminator drives the loss to zero
    big = torch.full((2, 4, 4), 60.0)
    assert float(domain_bce_two_sided(big, -big)) < 1e-12
    assert float(adversarial_bce(big, big)) < 1e-12


def test_two_sided_bce_matches_oracle(rng):
    src = torch.from_numpy(rng.normal(0, 1, (2, 3, 3)).astype(np.float32))
    tgt = torch.from_numpy(rng.normal(0, 1, (2, 3, 3)).astype(np.float32))
    ours = float(domain_bce_two_sided(src, tgt))
    oracle = (
        oracle_bce(src.numpy(), np.ones_like(src.numpy()))
        + oracle_bce(tgt.numpy(), np.zeros_like(tgt.numpy()))
    ) / 2
    assert abs(ours - oracle) < 1e-6
