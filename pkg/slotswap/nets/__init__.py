"""Encoder, generator and discriminator networks."""

from slotswap.nets.models import (
    Discriminator,
    Encoder,
    Generator,
    NetworkConfig,
    SlotSwapModel,
    build_models,
    discriminator_forward,
    encoder_forward,
    generator_forward,
)
from slotswap.nets.exceptions import (
    DiscriminatorKeyError,
    NetworkConfigError,
    NetworkError,
    NetworkShapeError,
)

__all__ = [
    "Discriminator",
    "Encoder",
    "Generator",
    "NetworkConfig",
    "SlotSwapModel",
    "build_models",
    "discriminator_forward",
    "encoder_forward",
    "generator_forward",
    "DiscriminatorKeyError",
    "NetworkConfigError",
    "NetworkError",
    "NetworkShapeError",
]
