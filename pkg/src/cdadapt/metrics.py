"""Pixel-level evaluation: confusion counts, P/R/F1/OA/IoU, per-sample analysis.

Dataset-level metrics accumulate a single global confusion over all pixels
(micro-average); per-sample F1 is a separate path and the two generally differ.
Degenerate cases follow the empty-positive convention: a sample with no
positives in either prediction or ground truth scores perfect, so all-negative
tiles do not poison per-sample statistics.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


@dataclass
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def add(self, other: "Confusion") -> "Confusion":
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        self.tn += other.tn
        return self


@dataclass
class MetricReport:
    precision: float
    recall: float
    f1: float
    oa: float
    iou: float
    n_samples: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


def confusion(pred: np.ndarray, gt: np.ndarray) -> Confusion:
    """Exact pixel counts; positive class is "change"."""
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    for name, m in (("pred", pred), ("gt", gt)):
        vals = np.unique(m)
        if not np.isin(vals, (0, 1)).all():
            raise ValueError(f"{name} must be binary 0/1, got values {vals}")
    p = pred.astype(bool)
    g = gt.astype(bool)
    return Confusion(
        tp=int((p & g).sum()),
        fp=int((p & ~g).sum()),
        fn=int((~p & g).sum()),
        tn=int((~p & ~g).sum()),
    )


def metrics_from_confusion(c: Confusion, n_samples: int = 1) -> MetricReport:
    """Standard formulas with explicit conventions for empty denominators."""
    if c.total <= 0:
        raise ValueError("confusion holds no pixels")
    if c.tp + c.fp == 0:
        precision = 1.0 if c.fn == 0 else 0.0
    else:
        precision = c.tp / (c.tp + c.fp)
    if c.tp + c.fn == 0:
        recall = 1.0 if c.fp == 0 else 0.0
    else:
        recall = c.tp / (c.tp + c.fn)
    if c.tp + c.fp + c.fn == 0:
        f1 = 1.0
        iou = 1.0
    else:
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        iou = c.tp / (c.tp + c.fp + c.fn)
    oa = (c.tp + c.tn) / c.total
    return MetricReport(precision=precision, recall=recall, f1=f1, oa=oa, iou=iou, n_samples=n_samples)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall <= 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def dataset_metrics(preds: list[np.ndarray], gts: list[np.ndarray]) -> MetricReport:
    """Micro-averaged metrics over a dataset: one global confusion."""
    if len(preds) != len(gts):
        raise ValueError("pred/gt count mismatch")
    total = Confusion()
    for p, g in zip(preds, gts):
        total.add(confusion(p, g))
    return metrics_from_confusion(total, n_samples=len(preds))


def per_sample_f1(preds: list[np.ndarray], gts: list[np.ndarray]) -> list[float]:
    return [metrics_from_confusion(confusion(p, g)).f1 for p, g in zip(preds, gts)]


def analyze_per_sample(
    f1s: list[float],
    baseline_f1: float,
    prev_f1s: list[float] | None = None,
    improvement_threshold: float = 0.05,
) -> dict:
    """Per-sample F1 distribution summary.

    frac_above_baseline uses a strict inequality. When a previous run's
    per-sample F1 list is supplied, also reports the fraction of samples whose
    F1 improved and, among those, the fraction improving by more than the
    threshold, plus a histogram of the deltas.
    """
    if not f1s:
        raise ValueError("no per-sample scores")
    out: dict = {
        "n_samples": len(f1s),
        "frac_above_baseline": float(np.mean([f > baseline_f1 for f in f1s])),
    }
    if prev_f1s is not None:
        if len(prev_f1s) != len(f1s):
            raise ValueError("per-sample score lists differ in length")
        deltas = np.asarray(f1s) - np.asarray(prev_f1s)
        improved = deltas > 0
        out["frac_improved"] = float(improved.mean())
        out["frac_improvements_above_threshold"] = (
            float((deltas[improved] > improvement_threshold).mean()) if improved.any() else 0.0
        )
        counts, edges = np.histogram(deltas, bins=np.arange(-1.0, 1.05, 0.1))
        out["improvement_histogram"] = {
            "bin_edges": [round(float(e), 10) for e in edges],
            "counts": counts.tolist(),
        }
    return out


def render_overlay(pred: np.ndarray, gt: np.ndarray, base: np.ndarray | None = None) -> np.ndarray:
    """Error overlay: false positives red, false negatives green, hits white."""
    h, w = pred.shape
    if base is None:
        overlay = np.zeros((h, w, 3), dtype=np.float32)
    else:
        overlay = (base.mean(axis=2, keepdims=True) * 0.5).repeat(3, axis=2).astype(np.float32)
    p = pred.astype(bool)
    g = gt.astype(bool)
    overlay[p & ~g] = (1.0, 0.0, 0.0)
    overlay[~p & g] = (0.0, 1.0, 0.0)
    overlay[p & g] = (1.0, 1.0, 1.0)
    return overlay


def write_report(path: str | Path, metrics: MetricReport, per_sample: list[dict] | None = None, extra: dict | None = None) -> None:
    payload: dict = {"metrics": metrics.to_dict()}
    if per_sample is not None:
        payload["per_sample"] = per_sample
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
