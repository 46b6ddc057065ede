"""Model evaluation over datasets: predictions, metrics, per-sample analysis."""

from __future__ import annotations

import torch

from ..data.pairs import ImagePair
from ..metrics import (
    Confusion,
    MetricReport,
    analyze_per_sample,
    confusion,
    metrics_from_confusion,
)
from ..models.network import ChangeDetector
from .batching import DomainBatch


def predict_masks(model: ChangeDetector, dataset: list[ImagePair], batch_size: int = 8) -> list:
    """Binary change maps at the 0.5 threshold, one per sample."""
    was_training = model.training
    model.eval()
    preds = []
    with torch.no_grad():
        for i in range(0, len(dataset), batch_size):
            chunk = dataset[i : i + batch_size]
            t1, t2, _ = DomainBatch(pairs=chunk).tensors()
            prob = model(t1, t2).prob
            for j in range(len(chunk)):
                preds.append((prob[j].numpy() > 0.5).astype("uint8"))
    if was_training:
        model.train()
    return preds


def evaluate_model(
    model: ChangeDetector, dataset: list[ImagePair], batch_size: int = 8
) -> tuple[MetricReport, list[dict]]:
    """Micro-averaged metrics plus per-sample F1 for a labeled dataset."""
    labeled = [p for p in dataset if p.mask is not None]
    if not labeled:
        raise ValueError("dataset has no labeled samples to evaluate")
    preds = predict_masks(model, labeled, batch_size)
    total = Confusion()
    per_sample = []
    for pair, pred in zip(labeled, preds):
        c = confusion(pred, pair.mask)
        total.add(c)
        per_sample.append({"sample_id": pair.id, "f1": metrics_from_confusion(c).f1})
    return metrics_from_confusion(total, n_samples=len(labeled)), per_sample


def per_sample_analysis(
    model: ChangeDetector,
    dataset: list[ImagePair],
    baseline_f1: float,
    prev_model: ChangeDetector | None = None,
    improvement_threshold: float = 0.05,
) -> dict:
    """Distribution of per-sample F1 vs a baseline, optionally vs an earlier model."""
    _, per_sample = evaluate_model(model, dataset)
    f1s = [row["f1"] for row in per_sample]
    prev_f1s = None
    if prev_model is not None:
        _, prev_rows = evaluate_model(prev_model, dataset)
        prev_f1s = [row["f1"] for row in prev_rows]
    return analyze_per_sample(f1s, baseline_f1, prev_f1s, improvement_threshold)
