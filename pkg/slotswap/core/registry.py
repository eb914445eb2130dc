"""Average attribute vectors used for domain-level translation."""

import copy
import logging
from typing import Dict, List, Optional, Tuple, Union

import torch

from slotswap.core.exceptions import RegistryNotReadyError, SlotShapeError
from slotswap.exceptions import ValidationError
from slotswap.schema import AttributeSchema, SlotLayout

logger = logging.getLogger(__name__)

REGISTRY_MODES = ("minibatch", "ema")


class AverageVectorRegistry:
    """Per (attribute, value) mean slot tensor.

    In ``minibatch`` mode every update replaces the entry with the mean of
    the incoming batch. In ``ema`` mode the entry moves toward the batch mean
    by ``ema_rate``; the first update of an empty entry takes the batch mean
    as is.

    Attributes:
        schema: Attribute schema
        layout: Slot layout (fixes each entry's shape)
        mode: Default update mode
        ema_rate: EMA step size in (0, 1]
    """

    def __init__(
        self,
        schema: AttributeSchema,
        layout: SlotLayout,
        mode: str = "minibatch",
        ema_rate: float = 0.01,
    ) -> None:
        """Initialize an empty registry.

        Args:
            schema: Attribute schema
            layout: Slot layout
            mode: 'minibatch' or 'ema'
            ema_rate: EMA step size

        Raises:
            ValidationError: If mode or ema_rate is invalid
        """
        if mode not in REGISTRY_MODES:
            raise ValidationError(f"mode must be one of {REGISTRY_MODES}, got '{mode}'")
        if not 0.0 < ema_rate <= 1.0:
            raise ValidationError(f"ema_rate must be in (0, 1], got {ema_rate}")
        self.schema = schema
        self.layout = layout
        self.mode = mode
        self.ema_rate = ema_rate
        self._means: Dict[Tuple[str, str], torch.Tensor] = {}
        self._counts: Dict[Tuple[str, str], int] = {}

    def update(
        self,
        attribute: str,
        value: str,
        slot_batch: torch.Tensor,
        mode: Optional[str] = None,
    ) -> "AverageVectorRegistry":
        """Fold a batch of slots (N×C×H×W) for one value into its entry.

        Raises:
            SlotShapeError: If the batch does not match the attribute's slot
            SchemaLookupError: If attribute/value are not in the schema
        """
        attr_index, _, _ = self.schema.value_index(attribute, value)
        expected = self.layout.slot_shape(attr_index)
        if slot_batch.dim() != 4 or tuple(slot_batch.shape[1:]) != expected or slot_batch.shape[0] == 0:
            raise SlotShapeError(
                f"Registry update for {attribute}={value} got shape {tuple(slot_batch.shape)}, "
                f"expected (N>=1, {expected[0]}, {expected[1]}, {expected[2]})"
            )
        mode = mode or self.mode
        if mode not in REGISTRY_MODES:
            raise ValidationError(f"mode must be one of {REGISTRY_MODES}, got '{mode}'")

        key = (attribute, value)
        batch_mean = slot_batch.detach().mean(dim=0)
        current = self._means.get(key)
        if mode == "minibatch" or current is None:
            self._means[key] = batch_mean.clone()
        else:
            self._means[key] = (1.0 - self.ema_rate) * current + self.ema_rate * batch_mean
        self._counts[key] = self._counts.get(key, 0) + int(slot_batch.shape[0])
        return self

    def mean(self, attribute: str, value: str) -> torch.Tensor:
        """Average slot (C×H×W) of one value.

        Raises:
            RegistryNotReadyError: If the entry was never updated
        """
        self.schema.value_index(attribute, value)
        key = (attribute, value)
        if key not in self._means:
            raise RegistryNotReadyError(attribute, value)
        return self._means[key]

    def is_empty(self, attribute: str, value: str) -> bool:
        return (attribute, value) not in self._means

    def count(self, attribute: str, value: str) -> int:
        return self._counts.get((attribute, value), 0)

    def ready_values(self, attribute: str) -> List[str]:
        """Values of ``attribute`` that have an average vector, in schema order."""
        return [v for v in self.schema.attribute(attribute).values if (attribute, v) in self._means]

    def state_dict(self) -> Dict[str, torch.Tensor]:
        """Named tensors ``avg/<attribute>/<value>`` and ``count/<attribute>/<value>``."""
        state: Dict[str, torch.Tensor] = {}
        for entry in self.schema.entries():
            key = (entry.attribute, entry.value)
            if key in self._means:
                state[f"avg/{entry.attribute}/{entry.value}"] = self._means[key].clone()
                state[f"count/{entry.attribute}/{entry.value}"] = torch.tensor(
                    self._counts[key], dtype=torch.int64
                )
        return state

    def load_state_dict(self, state: Dict[str, torch.Tensor]) -> None:
        """Replace all entries with those of a ``state_dict``.

        Raises:
            SlotShapeError: If a stored mean does not match the layout
            SchemaLookupError: If a key names an unknown attribute/value
        """
        means: Dict[Tuple[str, str], torch.Tensor] = {}
        counts: Dict[Tuple[str, str], int] = {}
        for name, tensor in state.items():
            kind, attribute, value = name.split("/", 2)
            attr_index, _, _ = self.schema.value_index(attribute, value)
            if kind == "avg":
                if tuple(tensor.shape) != self.layout.slot_shape(attr_index):
                    raise SlotShapeError(f"Stored mean {name} has shape {tuple(tensor.shape)}")
                means[(attribute, value)] = tensor.clone()
            elif kind == "count":
                counts[(attribute, value)] = int(tensor.item())
        self._means = means
        self._counts = {key: counts.get(key, 0) for key in means}
        logger.debug(f"Loaded registry with {len(means)} of {self.schema.m} entries")

    def copy(self) -> "AverageVectorRegistry":
        """Independent copy (e.g. a frozen registry for evaluation)."""
        return copy.deepcopy(self)

    def to(self, device: Union[str, torch.device], dtype: Optional[torch.dtype] = None) -> "AverageVectorRegistry":
        self._means = {k: v.to(device=device, dtype=dtype or v.dtype) for k, v in self._means.items()}
        return self


def registry_update(
    registry: AverageVectorRegistry,
    attribute: str,
    value: str,
    slot_batch: torch.Tensor,
    mode: Optional[str] = None,
) -> AverageVectorRegistry:
    """Functional form of ``AverageVectorRegistry.update``."""
    return registry.update(attribute, value, slot_batch, mode=mode)
