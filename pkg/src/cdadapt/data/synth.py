"""Synthetic bi-temporal domain pairs for desk-scale experiments.

Each pair renders a textured background plus disjoint axis-aligned "buildings".
Frame t2 adds or removes a change_density-controlled subset of them, and the
mask is exactly the set of pixels covered by those changed rectangles. A domain
style (resolution rescale, color shift, texture noise) is applied to both
frames after rendering, so masks stay exact. Everything is a pure function of
the parameter seed.

The renderer also emits a geometry record per pair (object rectangles and
whether each was static, added, or removed) so tests can rebuild the expected
mask independently of the rendering path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .pairs import ImagePair


@dataclass(frozen=True)
class SynthDomainParams:
    resolution_scale: float = 1.0
    color_shift: tuple[float, float, float] = (0.0, 0.0, 0.0)
    texture_noise_sigma: float = 0.0
    object_size_range: tuple[int, int] = (10, 28)
    change_density: float = 0.5
    seed: int = 0
    size: int = 256
    n_objects: int = 8

    def __post_init__(self):
        if self.resolution_scale <= 0:
            raise ValueError("resolution_scale must be > 0")
        if not 0.0 <= self.change_density <= 1.0:
            raise ValueError(f"change_density must lie in [0, 1], got {self.change_density}")
        if self.texture_noise_sigma < 0:
            raise ValueError("texture_noise_sigma must be >= 0")
        if any(abs(c) > 0.3 for c in self.color_shift):
            raise ValueError("color_shift components must lie in [-0.3, 0.3]")
        lo, hi = self.object_size_range
        if not (0 < lo <= hi):
            raise ValueError("object_size_range must satisfy 0 < min <= max")
        if hi > self.size // 2:
            raise ValueError("objects larger than half the image do not place reliably")
        if self.n_objects < 1:
            raise ValueError("n_objects must be >= 1")


def _resize_f32(img: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize of a float HxWx3 array via per-channel PIL 'F' images."""
    chans = [
        np.asarray(Image.fromarray(img[:, :, c], mode="F").resize(size, Image.BILINEAR))
        for c in range(img.shape[2])
    ]
    return np.stack(chans, axis=2)


def _background(size: int, rng: np.random.Generator) -> np.ndarray:
    base = rng.uniform(0.18, 0.40, size=3)
    base[1] += 0.04  # slight green cast so backgrounds read as terrain
    coarse = rng.normal(0.0, 1.0, size=(size // 8, size // 8, 3)).astype(np.float32)
    texture = _resize_f32(coarse, (size, size)) * 0.04
    return np.clip(base[None, None, :] + texture, 0.0, 1.0).astype(np.float32)


def _place_objects(size: int, n: int, size_range: tuple[int, int], rng: np.random.Generator) -> list[dict]:
    """Rejection-sample disjoint rectangles (1px separation), 2px inside the border."""
    lo, hi = size_range
    rects: list[dict] = []
    for _ in range(n):
        for _attempt in range(200):
            w = int(rng.integers(lo, hi + 1))
            h = int(rng.integers(lo, hi + 1))
            if w > size - 4 or h > size - 4:
                continue
            x = int(rng.integers(2, size - w - 1))
            y = int(rng.integers(2, size - h - 1))
            if all(
                x + w + 1 <= r["x"] or r["x"] + r["w"] + 1 <= x
                or y + h + 1 <= r["y"] or r["y"] + r["h"] + 1 <= y
                for r in rects
            ):
                color = np.clip(rng.uniform(0.5, 0.9) + rng.uniform(-0.1, 0.1, size=3), 0.0, 1.0)
                rects.append({"x": x, "y": y, "w": w, "h": h, "color": color.tolist()})
                break
    return rects


def _draw(img: np.ndarray, rect: dict) -> None:
    x, y, w, h = rect["x"], rect["y"], rect["w"], rect["h"]
    img[y : y + h, x : x + w] = rect["color"]
    # darker 1px rim gives edges some contrast under blur
    rim = np.asarray(rect["color"], dtype=np.float32) * 0.6
    img[y, x : x + w] = rim
    img[y + h - 1, x : x + w] = rim
    img[y : y + h, x] = rim
    img[y : y + h, x + w - 1] = rim


def apply_domain_style(img: np.ndarray, params: SynthDomainParams, rng: np.random.Generator) -> np.ndarray:
    """Resolution rescale + color shift + texture noise; geometry untouched."""
    out = img
    if params.resolution_scale != 1.0:
        size = img.shape[0]
        small = max(4, int(round(size * params.resolution_scale)))
        out = _resize_f32(_resize_f32(out, (small, small)), (size, size))
    shift = np.asarray(params.color_shift, dtype=np.float32)
    if shift.any():
        out = out + shift[None, None, :]
    if params.texture_noise_sigma > 0:
        out = out + rng.normal(0.0, params.texture_noise_sigma, size=out.shape)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def synth_domain_dataset_with_geometry(
    n: int, params: SynthDomainParams, domain: str = "source", id_prefix: str = "synth"
) -> tuple[list[ImagePair], dict]:
    """Render n pairs plus the geometry record used by mask oracles."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pairs = []
    geometry: dict[str, list[dict]] = {}
    for i in range(n):
        rng = np.random.default_rng([params.seed & 0xFFFFFFFF, i])
        sample_id = f"{id_prefix}_{i:04d}"
        bg = _background(params.size, rng)
        rects = _place_objects(params.size, params.n_objects, params.object_size_range, rng)

        n_changed = int(round(params.change_density * len(rects)))
        changed_idx = set(rng.choice(len(rects), size=n_changed, replace=False).tolist()) if n_changed else set()

        t1, t2 = bg.copy(), bg.copy()
        mask = np.zeros((params.size, params.size), dtype=np.uint8)
        record = []
        for j, rect in enumerate(rects):
            if j in changed_idx:
                kind = "add" if rng.random() < 0.5 else "remove"
            else:
                kind = "static"
            if kind in ("static", "remove"):
                _draw(t1, rect)
            if kind in ("static", "add"):
                _draw(t2, rect)
            if kind != "static":
                mask[rect["y"] : rect["y"] + rect["h"], rect["x"] : rect["x"] + rect["w"]] = 1
            record.append({"x": rect["x"], "y": rect["y"], "w": rect["w"], "h": rect["h"], "kind": kind})

        rng_t1 = np.random.default_rng([params.seed & 0xFFFFFFFF, i, 1])
        rng_t2 = np.random.default_rng([params.seed & 0xFFFFFFFF, i, 2])
        t1 = apply_domain_style(t1, params, rng_t1)
        t2 = apply_domain_style(t2, params, rng_t2)

        geometry[sample_id] = record
        pairs.append(ImagePair(id=sample_id, t1=t1, t2=t2, mask=mask, domain=domain).validate())
    return pairs, geometry


def synth_domain_dataset(n: int, params: SynthDomainParams, domain: str = "source") -> list[ImagePair]:
    pairs, _ = synth_domain_dataset_with_geometry(n, params, domain)
    return pairs


def geometry_mask(record: list[dict], size: int) -> np.ndarray:
    """Independent mask oracle: rasterize the changed rectangles of one record."""
    mask = np.zeros((size, size), dtype=np.uint8)
    for r in record:
        if r["kind"] != "static":
            mask[r["y"] : r["y"] + r["h"], r["x"] : r["x"] + r["w"]] = 1
    return mask


def write_geometry(geometry: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(geometry, fh, sort_keys=True, indent=2)
