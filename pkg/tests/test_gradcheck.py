"""Autodiff vs central-finite-difference checks on toy shapes (float64)."""

import pytest
import torch

from cdadapt.models.network import build_model
from gradcheck_util import finite_difference_max_rel_err


@pytest.fixture
def toy(tiny_config):
    model, disc = build_model(tiny_config)
    return model.double(), disc.double()


def test_full_model_gradients_match_finite_differences(toy):
    model, disc = toy
    g = torch.Generator().manual_seed(11)
    t1 = torch.randn(1, 3, 32, 32, generator=g, dtype=torch.float64)
    t2 = torch.randn(1, 3, 32, 32, generator=g, dtype=torch.float64)
    w_logits = torch.randn(1, 32, 32, generator=g, dtype=torch.float64)
    w_disc = torch.randn(1, 2, 2, generator=g, dtype=torch.float64)

    def loss_fn():
        pred = model(t1, t2)
        d = disc(pred.d_input).logit_map
        return (pred.logits * w_logits).sum() + (d * w_disc).sum()

    named = list(model.named_parameters()) + list(disc.named_parameters())
    err = finite_difference_max_rel_err(loss_fn, named, h=1e-5, coords_per_tensor=4, seed=0)
    assert err < 1e-3, f"worst relative error {err:.3e}"


def test_ms_fusion_gradients_match_finite_differences(toy):
    model, _ = toy
    g = torch.Generator().manual_seed(13)
    t1 = torch.randn(1, 3, 32, 32, generator=g, dtype=torch.float64)
    t2 = torch.randn(1, 3, 32, 32, generator=g, dtype=torch.float64)
    w = torch.randn(1, 8, 8, 8, generator=g, dtype=torch.float64)

    def loss_fn():
        return (model.ms_fusion(model.g_features(t1, t2)).data * w).sum()

    err = finite_difference_max_rel_err(
        loss_fn, list(model.ms_fusion.named_parameters()), h=1e-5, coords_per_tensor=6, seed=1
    )
    assert err < 1e-4, f"worst relative error {err:.3e}"
