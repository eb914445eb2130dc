"""Translation operations built from encode, slot replacement and generate.

All functions run the networks in whatever mode the model is in; wrap calls
in ``inference(models)`` (or use ``Translator``) for deterministic,
gradient-free evaluation.
"""

import logging
from contextlib import contextmanager
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import torch

from slotswap.core.exceptions import EditValidationError, RegistryNotReadyError, SlotIndexError
from slotswap.core.registry import AverageVectorRegistry
from slotswap.core.slots import SlotCode, join_code, replace_slot, split_code
from slotswap.nets import SlotSwapModel
from slotswap.schema import SchemaError

logger = logging.getLogger(__name__)

# An edit source is a value name (domain-level) or a batch of reference images.
EditSource = Union[str, torch.Tensor]
Edit = Tuple[str, EditSource]


@contextmanager
def inference(models: SlotSwapModel) -> Iterator[SlotSwapModel]:
    """Eval mode and no autograd; the previous training flag is restored."""
    was_training = models.training
    models.eval()
    try:
        with torch.no_grad():
            yield models
    finally:
        models.train(was_training)


def encode(models: SlotSwapModel, images: torch.Tensor) -> SlotCode:
    """E(x) split into slots."""
    return split_code(models.encode(images), models.layout)


def decode(models: SlotSwapModel, code: SlotCode) -> torch.Tensor:
    """G(z) from a slot code."""
    return models.generate(join_code(code))


def reconstruct(models: SlotSwapModel, images: torch.Tensor) -> torch.Tensor:
    """G(E(x))."""
    return decode(models, encode(models, images))


def _check_attr(models: SlotSwapModel, attr_index: int) -> None:
    if not 0 <= attr_index < models.layout.n:
        raise SlotIndexError(attr_index, models.layout.n)


def transfer_instance(
    models: SlotSwapModel,
    x_src: torch.Tensor,
    x_ref: torch.Tensor,
    attr_index: int,
) -> Tuple[torch.Tensor, SlotCode, SlotCode]:
    """Copy one attribute from a reference image onto a source image.

    Args:
        models: Networks
        x_src: Source batch (N×3×S×S)
        x_ref: Reference batch (N×3×S×S, or 1×3×S×S to share one reference)
        attr_index: Attribute slot to transfer

    Returns:
        (x_trans, z_src, z_ref)

    Raises:
        SlotIndexError: If attr_index is outside [0, n)
    """
    _check_attr(models, attr_index)
    z_src = encode(models, x_src)
    z_ref = encode(models, x_ref)
    z_trans = replace_slot(z_src, attr_index, z_ref.slots[attr_index])
    return decode(models, z_trans), z_src, z_ref


def transfer_domain(
    models: SlotSwapModel,
    registry: AverageVectorRegistry,
    x_src: torch.Tensor,
    attribute: str,
    value: str,
) -> torch.Tensor:
    """Set one attribute to a value using the value's average slot.

    Raises:
        RegistryNotReadyError: If the registry has no entry for the value
        SchemaLookupError: If attribute or value is unknown
    """
    attr_index, _, _ = models.schema.value_index(attribute, value)
    mean = registry.mean(attribute, value).to(device=x_src.device, dtype=x_src.dtype)
    z_src = encode(models, x_src)
    return decode(models, replace_slot(z_src, attr_index, mean))


def back_translate(
    models: SlotSwapModel,
    x_trans: torch.Tensor,
    z_src: SlotCode,
    attr_index: int,
    z_trans: Optional[SlotCode] = None,
) -> torch.Tensor:
    """Restore the source's original slot on the translated image.

    ``z_trans`` may pass a precomputed E(x_trans).
    """
    _check_attr(models, attr_index)
    if z_trans is None:
        z_trans = encode(models, x_trans)
    return decode(models, replace_slot(z_trans, attr_index, z_src.slots[attr_index]))


def attribute_cycle(
    models: SlotSwapModel,
    x_trans: torch.Tensor,
    z_ref: SlotCode,
    attr_index: int,
    z_trans: Optional[SlotCode] = None,
) -> torch.Tensor:
    """Put the translated image's slot back onto the reference's code.

    ``z_trans`` may pass a precomputed E(x_trans).
    """
    _check_attr(models, attr_index)
    if z_trans is None:
        z_trans = encode(models, x_trans)
    return decode(models, replace_slot(z_ref, attr_index, z_trans.slots[attr_index]))


def _resolve_edits(
    models: SlotSwapModel,
    edits: Sequence[Edit],
) -> List[Tuple[int, str, EditSource]]:
    seen = set()
    resolved = []
    for attribute, source in edits:
        try:
            attr_index = models.schema.attr_index(attribute)
            if isinstance(source, str):
                models.schema.value_index(attribute, source)
        except SchemaError as e:
            raise EditValidationError(f"Invalid edit {attribute}: {e}") from e
        if attribute in seen:
            raise EditValidationError(f"Attribute '{attribute}' is edited more than once")
        seen.add(attribute)
        resolved.append((attr_index, attribute, source))
    return resolved


def multiplex_translate(
    models: SlotSwapModel,
    registry: AverageVectorRegistry,
    x_src: torch.Tensor,
    edits: Sequence[Edit],
) -> torch.Tensor:
    """Change several attributes at once with a single encode and generate.

    Args:
        models: Networks
        registry: Average vectors for value-name edits
        x_src: Source batch
        edits: (attribute, value name) for domain-level edits or
            (attribute, reference batch) for instance-level edits

    Returns:
        Translated batch; an empty edit list gives G(E(x_src))

    Raises:
        EditValidationError: On duplicate or unknown attributes
        RegistryNotReadyError: If a value-name edit has no average vector

    Examples:
        >>> multiplex_translate(model, registry, x, [("color", "blue"), ("shape", "square")])
    """
    resolved = _resolve_edits(models, edits)
    code = encode(models, x_src)
    for attr_index, attribute, source in resolved:
        if isinstance(source, str):
            slot = registry.mean(attribute, source).to(device=x_src.device, dtype=x_src.dtype)
        else:
            slot = encode(models, source).slots[attr_index]
        code = replace_slot(code, attr_index, slot)
    return decode(models, code)


def sequential_translate(
    models: SlotSwapModel,
    registry: AverageVectorRegistry,
    x_src: torch.Tensor,
    edits: Sequence[Edit],
) -> torch.Tensor:
    """Apply edits one after another, re-encoding the image between edits."""
    _resolve_edits(models, edits)
    x = x_src
    for edit in edits:
        x = multiplex_translate(models, registry, x, [edit])
    if not edits:
        x = reconstruct(models, x_src)
    return x


class Translator:
    """Inference-mode front end over the translation operations.

    Every call runs with the model in eval mode under ``torch.no_grad`` and
    restores the previous mode afterwards, so parameters and normalization
    statistics are never touched.

    Attributes:
        models: Trained networks
        registry: Frozen average-vector registry
    """

    def __init__(self, models: SlotSwapModel, registry: Optional[AverageVectorRegistry] = None):
        self.models = models
        self.registry = registry

    @property
    def schema(self):
        return self.models.schema

    def _to_model(self, images: torch.Tensor) -> torch.Tensor:
        param = next(self.models.parameters())
        return images.to(device=param.device, dtype=param.dtype)

    def encode(self, images: torch.Tensor) -> SlotCode:
        with inference(self.models):
            return encode(self.models, self._to_model(images))

    def reconstruct(self, images: torch.Tensor) -> torch.Tensor:
        with inference(self.models):
            return reconstruct(self.models, self._to_model(images))

    def transfer(self, x_src: torch.Tensor, x_ref: torch.Tensor, attribute: str) -> torch.Tensor:
        """Instance-level transfer of ``attribute`` from x_ref onto x_src."""
        attr_index = self.schema.attr_index(attribute)
        with inference(self.models):
            x_trans, _, _ = transfer_instance(
                self.models, self._to_model(x_src), self._to_model(x_ref), attr_index
            )
        return x_trans

    def translate(self, x_src: torch.Tensor, attribute: str, value: str) -> torch.Tensor:
        """Domain-level translation of ``attribute`` to ``value``."""
        if self.registry is None:
            raise RegistryNotReadyError(attribute, value)
        with inference(self.models):
            return transfer_domain(self.models, self.registry, self._to_model(x_src), attribute, value)

    def cycle(
        self,
        x_src: torch.Tensor,
        x_ref: torch.Tensor,
        attribute: str,
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """(x_trans, x_back, x_attr) for one instance-level transfer."""
        attr_index = self.schema.attr_index(attribute)
        with inference(self.models):
            x_trans, z_src, z_ref = transfer_instance(
                self.models, self._to_model(x_src), self._to_model(x_ref), attr_index
            )
            z_trans = encode(self.models, x_trans)
            x_back = back_translate(self.models, x_trans, z_src, attr_index, z_trans=z_trans)
            x_attr = attribute_cycle(self.models, x_trans, z_ref, attr_index, z_trans=z_trans)
        return x_trans, x_back, x_attr

    def multiplex(self, x_src: torch.Tensor, edits: Sequence[Edit], sequential: bool = False) -> torch.Tensor:
        """Several edits at once (or one after another when ``sequential``)."""
        edits = [
            (a, s if isinstance(s, str) else self._to_model(s)) for a, s in edits
        ]
        if self.registry is None:
            for attribute, source in edits:
                if isinstance(source, str):
                    raise RegistryNotReadyError(attribute, source)
        fn = sequential_translate if sequential else multiplex_translate
        with inference(self.models):
            return fn(self.models, self.registry, self._to_model(x_src), edits)

