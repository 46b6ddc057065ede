"""Micro-labeled fine-tuning.

The trained domain discriminator ranks target samples by how confidently it
still recognizes them as target (least-adapted first); the top of that ranking,
minus samples with almost no predicted change, is the annotation queue. Fine-
tuning then combines a consistency objective on unlabeled target data (clean
predictions as pseudo-labels for feature-perturbed and image-perturbed views)
with supervised pixel losses on the source batch and the few micro-labels.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from ..config import LossWeights, RunConfig
from ..data.pairs import ImagePair
from ..data.perturb import derive_spec, strong_perturb
from ..models.discriminator import DomainDiscriminator
from ..models.layers import FeatureMap
from ..models.network import ChangeDetector, load_checkpoint, save_checkpoint
from .batching import DomainBatch, batches_for_epoch
from .losses import bce_logits
from .ada import optimizer_for_groups, _set_lr, _append_log

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleScore:
    sample_id: str
    target_prob: float  # mean over discriminator cells of predicted-target probability
    change_frac: float  # fraction of pixels predicted changed


@dataclass(frozen=True)
class SelectedSample:
    sample_id: str
    rank: int
    target_prob: float
    change_frac: float
    backfilled: bool


@dataclass
class SelectionReport:
    rows: list[SelectedSample]
    k: int
    min_change_frac: float

    @property
    def sample_ids(self) -> list[str]:
        return [r.sample_id for r in self.rows]

    @property
    def n_backfilled(self) -> int:
        return sum(r.backfilled for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "min_change_frac": self.min_change_frac,
            "rows": [asdict(r) for r in self.rows],
        }

    def write_json(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "SelectionReport":
        return cls(
            rows=[SelectedSample(**r) for r in data["rows"]],
            k=data["k"],
            min_change_frac=data["min_change_frac"],
        )

    @classmethod
    def read_json(cls, path: str | Path) -> "SelectionReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def score_samples(
    tgt_ds: list[ImagePair],
    model: ChangeDetector,
    disc: DomainDiscriminator,
    batch_size: int = 8,
) -> list[SampleScore]:
    """Rank target samples worst-adapted first (descending target probability).

    Ties break by ascending sample id, so the ordering is total and stable.
    """
    if not tgt_ds:
        raise ValueError("empty dataset")
    was_training = model.training
    model.eval()
    disc.eval()
    scores = []
    with torch.no_grad():
        for i in range(0, len(tgt_ds), batch_size):
            chunk = tgt_ds[i : i + batch_size]
            t1, t2, _ = DomainBatch(pairs=chunk).tensors()
            pred = model(t1, t2)
            d_out = disc(pred.d_input).logit_map
            tgt_prob = (1.0 - torch.sigmoid(d_out)).mean(dim=(1, 2))
            change = (pred.prob > 0.5).float().mean(dim=(1, 2))
            for j, pair in enumerate(chunk):
                scores.append(
                    SampleScore(
                        sample_id=pair.id,
                        target_prob=float(tgt_prob[j]),
                        change_frac=float(change[j]),
                    )
                )
    if was_training:
        model.train()
        disc.train()
    return sorted(scores, key=lambda s: (-s.target_prob, s.sample_id))


def select_for_labeling(
    scores: list[SampleScore], k: int, min_change_frac: float = 0.005
) -> SelectionReport:
    """Top-k of the ranking after dropping near-changeless samples.

    If the filter leaves fewer than k, the remainder backfills from the
    filtered-out samples in score order and is flagged in the report.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= min_change_frac < 1.0:
        raise ValueError("min_change_frac must lie in [0, 1)")
    if k > len(scores):
        raise ValueError(f"k={k} exceeds the {len(scores)} scored samples")
    kept = [s for s in scores if s.change_frac >= min_change_frac]
    dropped = [s for s in scores if s.change_frac < min_change_frac]
    chosen = [(s, False) for s in kept[:k]]
    if len(chosen) < k:
        need = k - len(chosen)
        logger.warning("selection backfilled %d sample(s) below min_change_frac=%g", need, min_change_frac)
        chosen += [(s, True) for s in dropped[:need]]
    rows = [
        SelectedSample(
            sample_id=s.sample_id,
            rank=i + 1,
            target_prob=s.target_prob,
            change_frac=s.change_frac,
            backfilled=backfilled,
        )
        for i, (s, backfilled) in enumerate(chosen)
    ]
    return SelectionReport(rows=rows, k=k, min_change_frac=min_change_frac)


def derived_int(*parts) -> int:
    blob = ":".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2s(blob, digest_size=8).digest(), "big") & 0x7FFFFFFF


def channel_dropout(x: torch.Tensor, rate: float, gen: torch.Generator) -> torch.Tensor:
    """Zero whole channels per sample and rescale survivors by 1/(1-rate)."""
    keep = (torch.rand(x.shape[0], x.shape[1], 1, 1, generator=gen) >= rate).to(x.dtype)
    return x * keep / (1.0 - rate)


def cdmatch_losses(
    unlabeled: list[ImagePair],
    model: ChangeDetector,
    perturb_seed: int,
    conf_threshold: float = 0.95,
    fp_rate: float = 0.5,
) -> tuple[torch.Tensor, int]:
    """Consistency loss between clean pseudo-labels and two perturbed views.

    Clean predictions harden into pseudo-labels on pixels where the model is
    confident (max(p, 1-p) >= threshold); the loss averages the BCE of the
    feature-perturbed and image-perturbed views over those pixels. No gradient
    flows through the pseudo-labels. Returns (loss, confident pixel count).
    """
    t1, t2, _ = DomainBatch(pairs=unlabeled).tensors()
    feats = model.g_features(t1, t2)
    logits_clean = model.h_predict(feats).logits
    p = torch.sigmoid(logits_clean).detach()
    pseudo = (p > 0.5).to(logits_clean.dtype)
    confident = torch.maximum(p, 1.0 - p) >= conf_threshold
    n_confident = int(confident.sum())
    if n_confident == 0:
        logger.warning("cdmatch: no confident pixels in batch; consistency loss is 0")

    gen = torch.Generator().manual_seed(derived_int(perturb_seed, "fp"))
    feats_fp = [FeatureMap(data=channel_dropout(f.data, fp_rate, gen), scale=f.scale) for f in feats]
    logits_fp = model.h_predict(feats_fp).logits

    s1 = np.stack([strong_perturb(pr.t1, derive_spec(perturb_seed, pr.id, 1)) for pr in unlabeled])
    s2 = np.stack([strong_perturb(pr.t2, derive_spec(perturb_seed, pr.id, 2)) for pr in unlabeled])
    t1s = torch.from_numpy(s1).permute(0, 3, 1, 2)
    t2s = torch.from_numpy(s2).permute(0, 3, 1, 2)
    logits_s = model(t1s, t2s).logits

    loss = (bce_logits(logits_fp, pseudo, confident) + bce_logits(logits_s, pseudo, confident)) / 2.0
    return loss, n_confident


def finetune_step(
    unlabeled: list[ImagePair],
    micro: list[ImagePair],
    src: list[ImagePair],
    model: ChangeDetector,
    weights: LossWeights,
    opt: torch.optim.Optimizer,
    perturb_seed: int,
    conf_threshold: float = 0.95,
    fp_rate: float = 0.5,
) -> tuple[float, dict]:
    """One fine-tuning step on the weighted objective; returns total and components."""
    if not micro or any(p.mask is None for p in micro):
        raise ValueError("fine-tuning requires micro-labeled target samples with masks")
    if any(p.mask is None for p in src):
        raise ValueError("source fine-tuning batch must be fully masked")

    l_cm, n_conf = cdmatch_losses(unlabeled, model, perturb_seed, conf_threshold, fp_rate)

    t1m, t2m, masks_m = DomainBatch(pairs=micro).tensors()
    l_ml = bce_logits(model(t1m, t2m).logits, masks_m)
    t1s, t2s, masks_s = DomainBatch(pairs=src).tensors()
    l_s = bce_logits(model(t1s, t2s).logits, masks_s)

    total = weights.alpha * l_cm + weights.beta * l_s + weights.gamma * l_ml
    opt.zero_grad()
    total.backward()
    opt.step()
    model.zero_grad(set_to_none=True)
    return float(total.detach()), {
        "L_CM": float(l_cm.detach()),
        "L_S": float(l_s.detach()),
        "L_ML": float(l_ml.detach()),
        "n_confident": n_conf,
    }


def run_mlft(
    tgt_ds: list[ImagePair],
    src_ds: list[ImagePair],
    micro_labels: list[ImagePair],
    config: RunConfig,
    out_dir: str | Path,
    init_checkpoint: str | Path | None = None,
    resume: bool = False,
    stop_after_epoch: int | None = None,
) -> tuple[Path, list[dict]]:
    """Fine-tune the configured fusion groups with the composite objective."""
    if not micro_labels:
        raise ValueError("micro_labels is empty; run selection and annotation first")
    if not tgt_ds or not src_ds:
        raise ValueError("both domains need a non-empty dataset")
    micro_labels = sorted(micro_labels, key=lambda p: p.id)
    if any(p.mask is None for p in micro_labels):
        raise ValueError("every micro-labeled sample needs a mask")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / "checkpoint.pt"
    log_path = out_dir / "train_log.jsonl"
    sched = config.mlft
    spec = config.mlft_batch

    start_epoch = 0
    if resume and ckpt_path.exists():
        model, disc, config, payload = load_checkpoint(ckpt_path, expected_config=config)
        opt = optimizer_for_groups(model, config.freeze.group_names(), sched.lr)
        opt.load_state_dict(payload["optimizers"]["mlft"])
        start_epoch = payload["epoch"] + 1
    elif init_checkpoint is not None:
        model, disc, _, _ = load_checkpoint(init_checkpoint, expected_config=config)
        opt = optimizer_for_groups(model, config.freeze.group_names(), sched.lr)
        if log_path.exists():
            log_path.unlink()
    else:
        raise ValueError("fine-tuning needs an adapted checkpoint to start from")

    trace: list[dict] = []
    for epoch in range(start_epoch, sched.epochs):
        lr = sched.lr_at(epoch)
        _set_lr(opt, lr)
        b_unl = batches_for_epoch(tgt_ds, spec.n_unlabeled_tgt, config.seed, "mlft_unl", epoch)
        b_src = batches_for_epoch(src_ds, spec.n_labeled_src, config.seed, "mlft_src", epoch)
        iters = min(len(b_unl), len(b_src))
        it = epoch * iters
        for i in range(iters):
            micro_batch = [
                micro_labels[(it * spec.n_labeled_tgt + j) % len(micro_labels)]
                for j in range(spec.n_labeled_tgt)
            ]
            total, comps = finetune_step(
                b_unl[i].pairs,
                micro_batch,
                b_src[i].pairs,
                model,
                config.weights,
                opt,
                perturb_seed=derived_int(config.seed, "cdmatch", epoch, i),
                conf_threshold=config.conf_threshold,
                fp_rate=config.fp_rate,
            )
            record = {
                "iter": it, "epoch": epoch, "L_FT": total,
                "L_CM": comps["L_CM"], "L_S": comps["L_S"], "L_ML": comps["L_ML"], "lr": lr,
            }
            trace.append(record)
            _append_log(log_path, record)
            it += 1
        save_checkpoint(
            ckpt_path, model, config, kind="mlft", epoch=epoch, disc=disc,
            optimizer_states={"mlft": opt.state_dict()},
        )
        if stop_after_epoch is not None and epoch >= stop_after_epoch:
            break
    return ckpt_path, trace
