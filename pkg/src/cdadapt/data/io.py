"""Dataset directory loading and saving.

Layout on disk: root/A/*.png and root/B/*.png hold the two temporal frames,
filename-aligned; root/label/*.png holds optional 0/255 binary masks. Pixel
values are scaled to [0, 1] floats in memory; mask 255 maps to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .pairs import ImagePair

LAYOUTS = ("levir_style", "whu_style", "generic")

IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".tif", ".tiff")


def read_image(path: str | Path) -> np.ndarray:
    """8-bit image file -> float32 HxWx3 in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32)
    return arr / 255.0


def write_image(path: str | Path, img: np.ndarray) -> None:
    arr = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def read_mask(path: str | Path) -> np.ndarray:
    """Binary mask PNG (0/255 or 0/1) -> uint8 HxW of {0, 1}."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return (arr > 127).astype(np.uint8) if arr.max() > 1 else arr.astype(np.uint8)


def write_mask(path: str | Path, mask: np.ndarray) -> None:
    Image.fromarray((mask.astype(np.uint8) * 255), mode="L").save(path)


@dataclass
class LoadReport:
    """Files that could not be paired, with the reason each was skipped."""

    skipped: list[dict] = field(default_factory=list)

    def add(self, name: str, reason: str) -> None:
        self.skipped.append({"name": name, "reason": reason})

    def __len__(self) -> int:
        return len(self.skipped)


def _index_dir(d: Path) -> dict[str, Path]:
    if not d.is_dir():
        return {}
    return {p.stem: p for p in sorted(d.iterdir()) if p.suffix.lower() in IMAGE_EXTS}


def load_cd_dataset_with_report(
    root: str | Path, layout: str = "generic", domain: str = "source"
) -> tuple[list[ImagePair], LoadReport]:
    """Load filename-aligned pairs; unmatched files go to the report, not an error."""
    if layout not in LAYOUTS:
        raise ValueError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    root = Path(root)
    a_files = _index_dir(root / "A")
    b_files = _index_dir(root / "B")
    label_files = _index_dir(root / "label")

    report = LoadReport()
    pairs = []
    for name in sorted(set(a_files) | set(b_files)):
        if name not in a_files:
            report.add(name, "present in B/ but missing from A/")
            continue
        if name not in b_files:
            report.add(name, "present in A/ but missing from B/")
            continue
        t1 = read_image(a_files[name])
        t2 = read_image(b_files[name])
        if t1.shape != t2.shape:
            raise ValueError(
                f"pair {name!r}: A is {t1.shape[:2]} but B is {t2.shape[:2]}"
            )
        mask = read_mask(label_files[name]) if name in label_files else None
        pairs.append(ImagePair(id=name, t1=t1, t2=t2, mask=mask, domain=domain).validate())
    return pairs, report


def load_cd_dataset(root: str | Path, layout: str = "generic", domain: str = "source") -> list[ImagePair]:
    pairs, _ = load_cd_dataset_with_report(root, layout, domain)
    return pairs


def save_pairs(pairs: list[ImagePair], root: str | Path) -> None:
    """Write pairs in the A/B/label layout (labels only for masked pairs)."""
    root = Path(root)
    for sub in ("A", "B"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    if any(p.mask is not None for p in pairs):
        (root / "label").mkdir(parents=True, exist_ok=True)
    for p in pairs:
        write_image(root / "A" / f"{p.id}.png", p.t1)
        write_image(root / "B" / f"{p.id}.png", p.t2)
        if p.mask is not None:
            write_mask(root / "label" / f"{p.id}.png", p.mask)
