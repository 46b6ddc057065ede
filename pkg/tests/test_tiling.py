import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdadapt.data.pairs import ImagePair, stitch_tiles, tile_grid, tile_pair


def make_pair(h, w, seed=0, with_mask=True):
    rng = np.random.default_rng(seed)
    return ImagePair(
        id="img",
        t1=rng.random((h, w, 3), dtype=np.float32),
        t2=rng.random((h, w, 3), dtype=np.float32),
        mask=(rng.random((h, w)) < 0.3).astype(np.uint8) if with_mask else None,
    )


def test_1024_grid_is_16_patches():
    grid = tile_grid(1024, 1024, 256)
    assert (grid.rows, grid.cols, grid.count) == (4, 4, 16)


def test_levir_style_split_arithmetic():
    # 1024x1024 pairs at tile 256: official-train 445 pairs and val 64 pairs
    per_pair = tile_grid(1024, 1024, 256).count
    assert 445 * per_pair == 7120
    assert 64 * per_pair == 1024


def test_rect_grid():
    assert tile_grid(512, 768, 256).count == 6


def test_tile_ids_and_order():
    pair = make_pair(128, 192)
    patches = tile_pair(pair, 64)
    assert [p.id for p in patches] == [
        "img_0_0", "img_0_1", "img_0_2", "img_1_0", "img_1_1", "img_1_2",
    ]
    assert all(p.t1.shape == (64, 64, 3) for p in patches)


def test_too_small_rejected():
    pair = make_pair(100, 300)
    with pytest.raises(ValueError, match="smaller than tile"):
        tile_pair(pair, 256)
    with pytest.raises(ValueError, match=">= 32"):
        tile_grid(100, 100, 16)


def test_border_discarded():
    pair = make_pair(130, 70)
    patches = tile_pair(pair, 64)
    assert len(patches) == 2  # 2 rows x 1 col; the 2px / 6px borders drop


def test_stitch_reproduces_crop_bit_exactly():
    pair = make_pair(320, 200, seed=5)
    grid = tile_grid(320, 200, 64)
    patches = tile_pair(pair, 64)
    stitched = stitch_tiles([p.t1 for p in patches], grid)
    crop = pair.t1[: grid.rows * 64, : grid.cols * 64]
    assert stitched.shape == crop.shape
    assert (stitched == crop).all()


def test_mask_tiling_commutes():
    pair = make_pair(192, 128, seed=9)
    patches = tile_pair(pair, 64)
    grid = tile_grid(192, 128, 64)
    stitched_mask = stitch_tiles([p.mask for p in patches], grid)
    assert (stitched_mask == pair.mask[:192, :128]).all()


def test_unmasked_pair_tiles_without_masks():
    patches = tile_pair(make_pair(64, 64, with_mask=False), 64)
    assert len(patches) == 1 and patches[0].mask is None


@settings(max_examples=25, deadline=None)
@given(
    h=st.integers(64, 300),
    w=st.integers(64, 300),
    tile=st.sampled_from([32, 64]),
    seed=st.integers(0, 10_000),
)
def test_property_tiling_lossless_on_covered_region(h, w, tile, seed):
    pair = make_pair(h, w, seed=seed)
    grid = tile_grid(h, w, tile)
    patches = tile_pair(pair, tile)
    assert len(patches) == grid.count
    for arr_name in ("t1", "t2"):
        stitched = stitch_tiles([getattr(p, arr_name) for p in patches], grid)
        assert (stitched == getattr(pair, arr_name)[: grid.rows * tile, : grid.cols * tile]).all()
