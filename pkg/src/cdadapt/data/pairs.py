"""Co-registered image pairs and non-overlapping tiling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DOMAINS = ("source", "target")


@dataclass
class ImagePair:
    """A bi-temporal sample: two aligned frames plus an optional change mask.

    Frames are float32 H x W x 3 arrays in [0, 1]; the mask, when present, is a
    uint8 H x W array of exactly {0, 1}.
    """

    id: str
    t1: np.ndarray
    t2: np.ndarray
    mask: np.ndarray | None = None
    domain: str = "source"

    def validate(self) -> "ImagePair":
        if self.domain not in DOMAINS:
            raise ValueError(f"domain must be one of {DOMAINS}, got {self.domain!r}")
        if self.t1.shape != self.t2.shape:
            raise ValueError(f"frame shapes differ: {self.t1.shape} vs {self.t2.shape}")
        if self.t1.ndim != 3 or self.t1.shape[2] != 3:
            raise ValueError(f"frames must be HxWx3, got {self.t1.shape}")
        for name, img in (("t1", self.t1), ("t2", self.t2)):
            if img.min() < 0.0 or img.max() > 1.0:
                raise ValueError(f"{name} has values outside [0, 1]")
        if self.mask is not None:
            if self.mask.shape != self.t1.shape[:2]:
                raise ValueError(
                    f"mask shape {self.mask.shape} does not match frames {self.t1.shape[:2]}"
                )
            vals = np.unique(self.mask)
            if not np.isin(vals, (0, 1)).all():
                raise ValueError(f"mask values must be exactly 0 or 1, got {vals}")
        return self

    @property
    def height(self) -> int:
        return self.t1.shape[0]

    @property
    def width(self) -> int:
        return self.t1.shape[1]


@dataclass(frozen=True)
class TileGrid:
    """Grid of non-overlapping tiles covering the top-left of an image."""

    tile: int = 256
    rows: int = 0
    cols: int = 0

    @property
    def count(self) -> int:
        return self.rows * self.cols


def tile_grid(height: int, width: int, tile: int = 256) -> TileGrid:
    """Grid arithmetic for an image; raises if the image cannot hold one tile."""
    if tile < 32:
        raise ValueError(f"tile must be >= 32, got {tile}")
    if height < tile or width < tile:
        raise ValueError(
            f"image {height}x{width} is smaller than tile {tile}; cannot extract any patch"
        )
    return TileGrid(tile=tile, rows=height // tile, cols=width // tile)


def tile_pair(pair: ImagePair, tile: int = 256) -> list[ImagePair]:
    """Cut a pair into row-major non-overlapping patches.

    Border pixels beyond the last full tile are discarded. Patch ids are
    "{parent_id}_{r}_{c}"; masks are tiled with the frames.
    """
    grid = tile_grid(pair.height, pair.width, tile)
    patches = []
    for r in range(grid.rows):
        for c in range(grid.cols):
            ys = slice(r * tile, (r + 1) * tile)
            xs = slice(c * tile, (c + 1) * tile)
            patches.append(
                ImagePair(
                    id=f"{pair.id}_{r}_{c}",
                    t1=pair.t1[ys, xs].copy(),
                    t2=pair.t2[ys, xs].copy(),
                    mask=None if pair.mask is None else pair.mask[ys, xs].copy(),
                    domain=pair.domain,
                )
            )
    return patches


def stitch_tiles(tiles: list[np.ndarray], grid: TileGrid) -> np.ndarray:
    """Reassemble row-major tiles into the covered (rows*tile) x (cols*tile) crop."""
    if len(tiles) != grid.count:
        raise ValueError(f"expected {grid.count} tiles, got {len(tiles)}")
    rows = [
        np.concatenate(tiles[r * grid.cols : (r + 1) * grid.cols], axis=1)
        for r in range(grid.rows)
    ]
    return np.concatenate(rows, axis=0)
