from .discriminator import DiscriminatorOutput, DomainDiscriminator
from .encoder import HierarchicalEncoder
from .fusion import MultiScaleFusion
from .head import ChangePrediction, PredictionHead
from .layers import ChannelLayerNorm, ConvBlock, FeatureMap
from .mt_transformer import (
    MTTransformerFusion,
    STPETables,
    WindowGrid,
    apply_stpe,
    mt_fuse,
    window_merge,
    window_partition,
)
from .network import (
    PARTITION,
    ChangeDetector,
    build_model,
    group_digest,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "FeatureMap",
    "ChannelLayerNorm",
    "ConvBlock",
    "HierarchicalEncoder",
    "MultiScaleFusion",
    "PredictionHead",
    "ChangePrediction",
    "DomainDiscriminator",
    "DiscriminatorOutput",
    "MTTransformerFusion",
    "STPETables",
    "WindowGrid",
    "apply_stpe",
    "mt_fuse",
    "window_partition",
    "window_merge",
    "ChangeDetector",
    "PARTITION",
    "build_model",
    "group_digest",
    "save_checkpoint",
    "load_checkpoint",
]
