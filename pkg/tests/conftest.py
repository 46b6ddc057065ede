import numpy as np
import pytest
import torch

from cdadapt.config import ModelConfig, RunConfig
from cdadapt.data.pairs import ImagePair


@pytest.fixture
def tiny_config() -> RunConfig:
    """Smallest config that exercises every architectural path (input 32)."""
    return RunConfig(
        seed=3,
        model=ModelConfig(
            input_size=32,
            encoder_widths=(4, 8, 8, 8),
            fused_channels=8,
            window=2,
            cx_blocks=1,
            disc_layers=2,
            disc_base=4,
        ),
    )


@pytest.fixture
def desk_config() -> RunConfig:
    """Desk-scale config for 64x64 tiles."""
    return RunConfig(
        seed=7,
        model=ModelConfig(
            input_size=64,
            encoder_widths=(8, 16, 32, 48),
            fused_channels=32,
            window=4,
            disc_layers=2,
            disc_base=16,
        ),
    )


def random_pair(rng: np.random.Generator, size: int = 64, with_mask: bool = True,
                domain: str = "source", pair_id: str = "p0") -> ImagePair:
    t1 = rng.random((size, size, 3), dtype=np.float32)
    t2 = rng.random((size, size, 3), dtype=np.float32)
    mask = (rng.random((size, size)) < 0.2).astype(np.uint8) if with_mask else None
    return ImagePair(id=pair_id, t1=t1, t2=t2, mask=mask, domain=domain)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
