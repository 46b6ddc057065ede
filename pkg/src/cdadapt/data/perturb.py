"""Strong photometric perturbations for consistency training.

All four kinds are purely photometric: geometry is never touched, so change
masks remain valid for the perturbed views. Output is always clipped to [0, 1]
and fully determined by the spec (kind, strength, seed).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

PERTURBATION_KINDS = ("color_jitter", "grayscale", "gaussian_blur", "contrast_shift")

_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float32)


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    strength: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}; choose from {PERTURBATION_KINDS}")
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"strength must lie in [0, 1], got {self.strength}")


def _gaussian_kernel1d(sigma: float) -> np.ndarray:
    radius = max(1, int(np.ceil(3.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return (k / k.sum()).astype(np.float64)


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with reflect padding; kernel normalized to unit mass."""
    if sigma <= 1e-8:
        return img.copy()
    k = _gaussian_kernel1d(sigma)
    r = len(k) // 2
    out = img.astype(np.float64)
    # rows
    padded = np.pad(out, ((r, r), (0, 0), (0, 0)), mode="reflect")
    out = sum(k[i] * padded[i : i + img.shape[0]] for i in range(len(k)))
    # cols
    padded = np.pad(out, ((0, 0), (r, r), (0, 0)), mode="reflect")
    out = sum(k[i] * padded[:, i : i + img.shape[1]] for i in range(len(k)))
    return out.astype(img.dtype)


def strong_perturb(image: np.ndarray, spec: PerturbationSpec) -> np.ndarray:
    """Apply one strong perturbation; identity at strength 0, shape always preserved."""
    rng = np.random.default_rng(spec.seed)
    s = spec.strength
    img = image.astype(np.float32)

    if spec.kind == "color_jitter":
        gain = 1.0 + s * 0.4 * rng.uniform(-1.0, 1.0, size=3).astype(np.float32)
        bias = s * 0.2 * rng.uniform(-1.0, 1.0, size=3).astype(np.float32)
        out = img * gain + bias
    elif spec.kind == "grayscale":
        gray = img @ _LUMA
        out = (1.0 - s) * img + s * gray[..., None]
    elif spec.kind == "gaussian_blur":
        out = gaussian_blur(img, sigma=2.0 * s)
    elif spec.kind == "contrast_shift":
        factor = 1.0 + s * 0.8 * rng.uniform(-1.0, 1.0)
        mean = img.mean(axis=(0, 1), keepdims=True)
        out = mean + factor * (img - mean)
    else:  # pragma: no cover - guarded by PerturbationSpec
        raise ValueError(spec.kind)

    if s == 0.0:
        return img.copy()
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def derive_spec(global_seed: int, sample_id: str, frame_index: int) -> PerturbationSpec:
    """Deterministic strong-perturbation draw for one frame of one sample.

    The two frames of a pair get independent draws (distinct frame_index).
    """
    digest = hashlib.blake2s(sample_id.encode(), digest_size=8).digest()
    key = [global_seed & 0xFFFFFFFF, int.from_bytes(digest, "big") & 0xFFFFFFFF, frame_index]
    rng = np.random.default_rng(key)
    kind = PERTURBATION_KINDS[int(rng.integers(len(PERTURBATION_KINDS)))]
    strength = float(rng.uniform(0.35, 0.75))
    seed = int(rng.integers(2**31 - 1))
    return PerturbationSpec(kind=kind, strength=strength, seed=seed)
