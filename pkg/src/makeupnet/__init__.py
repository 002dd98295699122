"""Component-specific makeup transfer: model, training, metrics, CLI, service."""

from .generator import (
    GeneratorConfig,
    MakeupTransferNet,
    TransferRequest,
    build_generator,
)
from .train import TrainConfig, Trainer, build_trainer

__all__ = [
    "GeneratorConfig",
    "MakeupTransferNet",
    "TransferRequest",
    "build_generator",
    "TrainConfig",
    "Trainer",
    "build_trainer",
]
