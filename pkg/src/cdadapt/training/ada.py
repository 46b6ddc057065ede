"""Alternating adversarial domain adaptation.

Each cycle runs three optimizer steps in order: (1) supervised change training
on source batches, updating temporal fusion, multi-scale fusion, and the head;
(2) discriminator training on both domains' head features with true domain
labels; (3) adversarial training of the configured fusion groups so the
discriminator scores both domains as source. There is no gradient reversal and
no mixed objective; the steps simply cycle.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch

from ..config import RunConfig
from ..data.pairs import ImagePair
from ..models.discriminator import DomainDiscriminator
from ..models.network import ChangeDetector, build_model, load_checkpoint, save_checkpoint
from .batching import DomainBatch, batches_for_epoch
from .losses import adversarial_bce, domain_bce_two_sided, seg_hybrid_loss

STEP1_GROUPS = ("mt_fusion", "ms_fusion", "head")


def optimizer_for_groups(model: ChangeDetector, groups: list[str] | tuple[str, ...], lr: float) -> torch.optim.AdamW:
    params = [p for name in groups for p in model.parameter_groups()[name]]
    if not params:
        raise ValueError(f"no parameters selected by groups {groups}")
    return torch.optim.AdamW(params, lr=lr)


def _set_lr(opt: torch.optim.Optimizer, lr: float) -> None:
    for pg in opt.param_groups:
        pg["lr"] = lr


def train_source_step(batch: DomainBatch, model: ChangeDetector, opt: torch.optim.Optimizer) -> float:
    """One supervised step on an all-source, fully masked batch."""
    if not all(d == "source" for d in batch.domain_labels):
        raise ValueError("source step requires an all-source batch")
    if not all(batch.has_mask):
        raise ValueError("source step requires masks on every sample")
    t1, t2, masks = batch.tensors()
    pred = model(t1, t2)
    loss, _, _ = seg_hybrid_loss(pred.logits, masks)
    opt.zero_grad()
    loss.backward()
    opt.step()
    model.zero_grad(set_to_none=True)
    return float(loss.detach())


def train_discriminator_step(
    src: DomainBatch,
    tgt: DomainBatch,
    model: ChangeDetector,
    disc: DomainDiscriminator,
    opt_d: torch.optim.Optimizer,
) -> float:
    """One discriminator step; no gradient reaches the segmentation network."""
    if len(src) != len(tgt):
        raise ValueError(f"per-domain counts must match, got {len(src)} vs {len(tgt)}")
    with torch.no_grad():
        d_src = model(*src.tensors()[:2]).d_input.data
        d_tgt = model(*tgt.tensors()[:2]).d_input.data
    loss = domain_bce_two_sided(disc(d_src).logit_map, disc(d_tgt).logit_map)
    opt_d.zero_grad()
    loss.backward()
    opt_d.step()
    disc.zero_grad(set_to_none=True)
    return float(loss.detach())


def train_adversarial_step(
    src: DomainBatch,
    tgt: DomainBatch,
    model: ChangeDetector,
    disc: DomainDiscriminator,
    opt_g: torch.optim.Optimizer,
) -> float:
    """One deception step on the enabled segmentation groups; discriminator untouched."""
    if len(src) != len(tgt):
        raise ValueError(f"per-domain counts must match, got {len(src)} vs {len(tgt)}")
    d_src = model(*src.tensors()[:2]).d_input
    d_tgt = model(*tgt.tensors()[:2]).d_input
    loss = adversarial_bce(disc(d_src).logit_map, disc(d_tgt).logit_map)
    opt_g.zero_grad()
    loss.backward()
    opt_g.step()
    model.zero_grad(set_to_none=True)
    disc.zero_grad(set_to_none=True)
    return float(loss.detach())


def _append_log(log_path: Path | None, record: dict) -> None:
    if log_path is not None:
        with open(log_path, "a") as fh:
            fh.write(json.dumps(record) + "\n")


def run_source(
    dataset: list[ImagePair],
    config: RunConfig,
    out_dir: str | Path,
    resume: bool = False,
    stop_after_epoch: int | None = None,
) -> tuple[Path, list[dict]]:
    """Supervised pretraining on the source domain (all groups train)."""
    if not dataset:
        raise ValueError("empty dataset")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / "checkpoint.pt"
    log_path = out_dir / "train_log.jsonl"

    start_epoch = 0
    if resume and ckpt_path.exists():
        model, _, config, payload = load_checkpoint(ckpt_path, expected_config=config)
        opt = optimizer_for_groups(model, ["encoder", *STEP1_GROUPS], config.source_lr)
        opt.load_state_dict(payload["optimizers"]["source"])
        start_epoch = payload["epoch"] + 1
    else:
        model, _ = build_model(config)
        opt = optimizer_for_groups(model, ["encoder", *STEP1_GROUPS], config.source_lr)
        if log_path.exists():
            log_path.unlink()

    trace: list[dict] = []
    it = start_epoch * max(1, len(dataset) // config.source_batch)
    for epoch in range(start_epoch, config.source_epochs):
        lr = config.source_lr * config.ada.lr_decay ** (epoch // config.ada.decay_every)
        _set_lr(opt, lr)
        for batch in batches_for_epoch(dataset, config.source_batch, config.seed, "source", epoch):
            loss = train_source_step(batch, model, opt)
            record = {"iter": it, "epoch": epoch, "L_seg": loss, "lr": lr}
            trace.append(record)
            _append_log(log_path, record)
            it += 1
        save_checkpoint(
            ckpt_path, model, config, kind="source", epoch=epoch,
            optimizer_states={"source": opt.state_dict()},
        )
        if stop_after_epoch is not None and epoch >= stop_after_epoch:
            break
    return ckpt_path, trace


def run_ada(
    src_ds: list[ImagePair],
    tgt_ds: list[ImagePair],
    config: RunConfig,
    out_dir: str | Path,
    init_checkpoint: str | Path | None = None,
    resume: bool = False,
    stop_after_epoch: int | None = None,
) -> tuple[Path, list[dict]]:
    """The full alternating loop; returns the checkpoint path and loss trace."""
    if not src_ds or not tgt_ds:
        raise ValueError("both domains need a non-empty dataset")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / "checkpoint.pt"
    log_path = out_dir / "train_log.jsonl"
    sched = config.ada

    start_epoch = 0
    if resume and ckpt_path.exists():
        model, disc, config, payload = load_checkpoint(ckpt_path, expected_config=config)
        start_epoch = payload["epoch"] + 1
        opt1 = optimizer_for_groups(model, STEP1_GROUPS, sched.lr)
        opt_d = torch.optim.AdamW(disc.parameters(), lr=sched.lr)
        opt_g = optimizer_for_groups(model, config.freeze.group_names(), sched.lr)
        opt1.load_state_dict(payload["optimizers"]["step1"])
        opt_d.load_state_dict(payload["optimizers"]["disc"])
        opt_g.load_state_dict(payload["optimizers"]["adv"])
    elif init_checkpoint is not None:
        model, disc, _, _ = load_checkpoint(init_checkpoint, expected_config=config)
        torch.manual_seed(config.seed + 1)  # fresh discriminator, decoupled from init
        disc = DomainDiscriminator(
            in_channels=config.model.fused_channels,
            base=config.model.disc_base,
            layers=config.model.disc_layers,
        )
        opt1 = optimizer_for_groups(model, STEP1_GROUPS, sched.lr)
        opt_d = torch.optim.AdamW(disc.parameters(), lr=sched.lr)
        opt_g = optimizer_for_groups(model, config.freeze.group_names(), sched.lr)
        if log_path.exists():
            log_path.unlink()
    else:
        model, disc = build_model(config)
        opt1 = optimizer_for_groups(model, STEP1_GROUPS, sched.lr)
        opt_d = torch.optim.AdamW(disc.parameters(), lr=sched.lr)
        opt_g = optimizer_for_groups(model, config.freeze.group_names(), sched.lr)
        if log_path.exists():
            log_path.unlink()

    bs1, bs2 = sched.batch_step1, sched.batch_step23_per_domain
    trace: list[dict] = []
    it = 0
    for epoch in range(start_epoch, sched.epochs):
        lr = sched.lr_at(epoch)
        for opt in (opt1, opt_d, opt_g):
            _set_lr(opt, lr)
        b_s1 = batches_for_epoch(src_ds, bs1, config.seed, "ada_s1", epoch)
        b_src = batches_for_epoch(src_ds, bs2, config.seed, "ada_s23_src", epoch)
        b_tgt = batches_for_epoch(tgt_ds, bs2, config.seed, "ada_s23_tgt", epoch)
        b_src3 = batches_for_epoch(src_ds, bs2, config.seed, "ada_s3_src", epoch)
        b_tgt3 = batches_for_epoch(tgt_ds, bs2, config.seed, "ada_s3_tgt", epoch)
        iters = min(len(b_s1), len(b_src), len(b_tgt), len(b_src3), len(b_tgt3))
        it = epoch * iters  # epochs have a fixed iteration count per config
        for i in range(iters):
            n = min(len(b_src[i]), len(b_tgt[i]))
            src2 = DomainBatch(pairs=b_src[i].pairs[:n])
            tgt2 = DomainBatch(pairs=b_tgt[i].pairs[:n])
            n3 = min(len(b_src3[i]), len(b_tgt3[i]))
            src3 = DomainBatch(pairs=b_src3[i].pairs[:n3])
            tgt3 = DomainBatch(pairs=b_tgt3[i].pairs[:n3])

            l_seg = train_source_step(b_s1[i], model, opt1)
            l_d = train_discriminator_step(src2, tgt2, model, disc, opt_d)
            l_adv = train_adversarial_step(src3, tgt3, model, disc, opt_g)

            record = {"iter": it, "epoch": epoch, "L_seg": l_seg, "L_D": l_d, "L_adv": l_adv, "lr": lr}
            trace.append(record)
            _append_log(log_path, record)
            it += 1
        save_checkpoint(
            ckpt_path, model, config, kind="ada", epoch=epoch, disc=disc,
            optimizer_states={
                "step1": opt1.state_dict(),
                "disc": opt_d.state_dict(),
                "adv": opt_g.state_dict(),
            },
        )
        if stop_after_epoch is not None and epoch >= stop_after_epoch:
            break
    return ckpt_path, trace
