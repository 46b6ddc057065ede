from .ada import (
    STEP1_GROUPS,
    optimizer_for_groups,
    run_ada,
    run_source,
    train_adversarial_step,
    train_discriminator_step,
    train_source_step,
)
from .batching import DomainBatch, batches_for_epoch, epoch_order
from .evaluate import evaluate_model, per_sample_analysis, predict_masks
from .losses import (
    SOURCE_LABEL,
    TARGET_LABEL,
    adversarial_bce,
    bce_logits,
    dice_loss,
    domain_bce,
    domain_bce_two_sided,
    seg_hybrid_loss,
)
from .mlft import (
    SampleScore,
    SelectedSample,
    SelectionReport,
    cdmatch_losses,
    channel_dropout,
    finetune_step,
    run_mlft,
    score_samples,
    select_for_labeling,
)

__all__ = [
    "DomainBatch",
    "batches_for_epoch",
    "epoch_order",
    "bce_logits",
    "dice_loss",
    "seg_hybrid_loss",
    "domain_bce",
    "domain_bce_two_sided",
    "adversarial_bce",
    "SOURCE_LABEL",
    "TARGET_LABEL",
    "STEP1_GROUPS",
    "optimizer_for_groups",
    "train_source_step",
    "train_discriminator_step",
    "train_adversarial_step",
    "run_source",
    "run_ada",
    "SampleScore",
    "SelectedSample",
    "SelectionReport",
    "score_samples",
    "select_for_labeling",
    "cdmatch_losses",
    "channel_dropout",
    "finetune_step",
    "run_mlft",
    "evaluate_model",
    "predict_masks",
    "per_sample_analysis",
]
