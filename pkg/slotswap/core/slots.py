"""Slot codes: the factored view of an encoder output."""

from dataclasses import dataclass
from typing import Tuple

import torch

from slotswap.core.exceptions import SlotIndexError, SlotShapeError
from slotswap.schema import SlotLayout


@dataclass(frozen=True, eq=False)
class SlotCode:
    """Uniqueness slot plus one slot per attribute, all batched N×C×H×W.

    Instances are never modified in place; ``replace_slot`` returns a new code
    that shares the untouched tensors.

    Attributes:
        uniqueness: Sample-specific slot
        slots: Attribute slots in schema order
        layout: Layout the tensors conform to
    """
    uniqueness: torch.Tensor
    slots: Tuple[torch.Tensor, ...]
    layout: SlotLayout

    def __post_init__(self) -> None:
        if len(self.slots) != self.layout.n:
            raise SlotShapeError(
                f"Expected {self.layout.n} attribute slots, got {len(self.slots)}"
            )
        h, w = self.layout.spatial
        batch = self.uniqueness.shape[0] if self.uniqueness.dim() == 4 else None
        _expect(self.uniqueness, (batch, self.layout.uniqueness_channels, h, w), "uniqueness")
        for i, slot in enumerate(self.slots):
            _expect(slot, (batch, *self.layout.slot_shape(i)), f"slot {i}")

    @property
    def batch_size(self) -> int:
        return int(self.uniqueness.shape[0])

    def same_as(self, other: "SlotCode") -> bool:
        """Exact elementwise equality of every slot."""
        if self.layout != other.layout or len(self.slots) != len(other.slots):
            return False
        pairs = zip((self.uniqueness, *self.slots), (other.uniqueness, *other.slots))
        return all(torch.equal(a, b) for a, b in pairs)

    def detach(self) -> "SlotCode":
        return SlotCode(
            uniqueness=self.uniqueness.detach(),
            slots=tuple(s.detach() for s in self.slots),
            layout=self.layout,
        )


def _expect(tensor: torch.Tensor, shape: tuple, what: str) -> None:
    if tensor.dim() != 4 or any(e is not None and e != a for e, a in zip(shape, tensor.shape)):
        raise SlotShapeError(f"{what} has shape {tuple(tensor.shape)}, expected {shape}")


def split_code(latent: torch.Tensor, layout: SlotLayout) -> SlotCode:
    """Partition an encoder output along channels into a SlotCode.

    Raises:
        SlotShapeError: If the latent does not match the layout

    Examples:
        >>> code = split_code(torch.arange(4.).view(1, 4, 1, 1), layout_1x1_2_1_1)
        >>> code.uniqueness.flatten().tolist(), [s.item() for s in code.slots]
        ([0.0, 1.0], [2.0, 3.0])
    """
    h, w = layout.spatial
    if latent.dim() != 4 or tuple(latent.shape[1:]) != (layout.total_channels, h, w):
        raise SlotShapeError(
            f"Latent shape {tuple(latent.shape)} does not match layout "
            f"(N, {layout.total_channels}, {h}, {w})"
        )
    parts = torch.split(latent, layout.split_sizes(), dim=1)
    return SlotCode(uniqueness=parts[0], slots=tuple(parts[1:]), layout=layout)


def join_code(code: SlotCode) -> torch.Tensor:
    """Concatenate a SlotCode back into the raw latent (inverse of split_code)."""
    return torch.cat([code.uniqueness, *code.slots], dim=1)


def replace_slot(code: SlotCode, attr_index: int, new_slot: torch.Tensor) -> SlotCode:
    """Return a copy of ``code`` whose slot ``attr_index`` is ``new_slot``.

    ``new_slot`` may be batched (N×C×H×W, or 1×C×H×W) or a single C×H×W
    vector such as a registry mean; single vectors broadcast over the batch.

    Raises:
        SlotIndexError: If attr_index is outside [0, n)
        SlotShapeError: If new_slot does not fit the slot
    """
    if not 0 <= attr_index < code.layout.n:
        raise SlotIndexError(attr_index, code.layout.n)
    expected = code.layout.slot_shape(attr_index)
    if new_slot.dim() == 3:
        new_slot = new_slot.unsqueeze(0)
    if new_slot.dim() != 4 or tuple(new_slot.shape[1:]) != expected:
        raise SlotShapeError(
            f"Replacement for slot {attr_index} has shape {tuple(new_slot.shape)}, "
            f"expected (N, {expected[0]}, {expected[1]}, {expected[2]})"
        )
    if new_slot.shape[0] != code.batch_size:
        if new_slot.shape[0] != 1:
            raise SlotShapeError(
                f"Replacement batch {new_slot.shape[0]} does not match code batch {code.batch_size}"
            )
        new_slot = new_slot.expand(code.batch_size, *expected)
    slots = list(code.slots)
    slots[attr_index] = new_slot
    return SlotCode(uniqueness=code.uniqueness, slots=tuple(slots), layout=code.layout)
