"""Slot-editing algebra: slot codes, average vectors and translation."""

from slotswap.core.slots import SlotCode, join_code, replace_slot, split_code
from slotswap.core.registry import REGISTRY_MODES, AverageVectorRegistry, registry_update
from slotswap.core.translate import (
    Translator,
    attribute_cycle,
    back_translate,
    decode,
    encode,
    inference,
    multiplex_translate,
    reconstruct,
    sequential_translate,
    transfer_domain,
    transfer_instance,
)
from slotswap.core.exceptions import (
    EditValidationError,
    RegistryNotReadyError,
    SlotError,
    SlotIndexError,
    SlotShapeError,
)

__all__ = [
    "SlotCode",
    "join_code",
    "replace_slot",
    "split_code",
    "REGISTRY_MODES",
    "AverageVectorRegistry",
    "registry_update",
    "Translator",
    "attribute_cycle",
    "back_translate",
    "decode",
    "encode",
    "inference",
    "multiplex_translate",
    "reconstruct",
    "sequential_translate",
    "transfer_domain",
    "transfer_instance",
    "EditValidationError",
    "RegistryNotReadyError",
    "SlotError",
    "SlotIndexError",
    "SlotShapeError",
]
