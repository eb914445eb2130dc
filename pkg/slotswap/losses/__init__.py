"""Training objectives and their weighted combination."""

from slotswap.losses.objectives import (
    ATTR_TARGETS,
    METRICS,
    PROBABILITY_EPS,
    LossReport,
    LossWeights,
    attribute_consistency_loss,
    back_transfer_loss,
    discriminator_loss,
    discriminator_loss_from_logits,
    distance,
    generation_loss,
    probability_eps,
    transfer_loss,
    transfer_loss_from_logits,
)
from slotswap.losses.exceptions import LossConfigError, LossError, LossInputError

__all__ = [
    "ATTR_TARGETS",
    "METRICS",
    "PROBABILITY_EPS",
    "LossReport",
    "LossWeights",
    "attribute_consistency_loss",
    "back_transfer_loss",
    "discriminator_loss",
    "discriminator_loss_from_logits",
    "distance",
    "generation_loss",
    "probability_eps",
    "transfer_loss",
    "transfer_loss_from_logits",
    "LossConfigError",
    "LossError",
    "LossInputError",
]
