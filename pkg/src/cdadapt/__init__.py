"""Domain-adaptive bi-temporal change detection with micro-labeled fine-tuning."""

__version__ = "0.1.0"

from .config import (
    AdaSchedule,
    FreezeConfig,
    LossWeights,
    MlftBatchSpec,
    MlftSchedule,
    ModelConfig,
    RunConfig,
)

__all__ = [
    "__version__",
    "RunConfig",
    "ModelConfig",
    "FreezeConfig",
    "AdaSchedule",
    "MlftSchedule",
    "MlftBatchSpec",
    "LossWeights",
]
