"""Training loop, checkpoints and metrics."""

from slotswap.training.trainer import (
    TRAIN_MODES,
    TrainConfig,
    TrainState,
    augmentation_decision,
    create_train_state,
    discriminator_update,
    train_iteration,
    train_step,
)
from slotswap.training.checkpoint import (
    CHECKPOINT_FORMAT_VERSION,
    Checkpoint,
    checkpoint_name,
    load_checkpoint,
    resolve_checkpoint,
    restore_train_state,
    save_checkpoint,
)
from slotswap.training.metrics import METRICS_NAME, MetricsWriter, read_metrics
from slotswap.training.runner import check_domains, run_training, training_split
from slotswap.training.exceptions import (
    CheckpointError,
    TrainConfigError,
    TrainingDivergenceError,
    TrainingError,
)

__all__ = [
    "TRAIN_MODES",
    "TrainConfig",
    "TrainState",
    "augmentation_decision",
    "create_train_state",
    "discriminator_update",
    "train_iteration",
    "train_step",
    "CHECKPOINT_FORMAT_VERSION",
    "Checkpoint",
    "checkpoint_name",
    "load_checkpoint",
    "resolve_checkpoint",
    "restore_train_state",
    "save_checkpoint",
    "METRICS_NAME",
    "MetricsWriter",
    "read_metrics",
    "check_domains",
    "run_training",
    "training_split",
    "CheckpointError",
    "TrainConfigError",
    "TrainingDivergenceError",
    "TrainingError",
]
