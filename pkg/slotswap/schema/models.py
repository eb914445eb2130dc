"""Attribute schema and slot layout.

The schema is the ordered catalogue of attributes and their values. The slot
layout partitions the encoder output channels into one uniqueness slot
followed by one slot per attribute, in schema order.
"""

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Sequence, Tuple, Union

from slotswap.schema.exceptions import SchemaLookupError, SchemaValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Attribute:
    """A named attribute with its ordered values.

    Attributes:
        name: Attribute name (e.g. "color")
        values: Ordered value names (e.g. ("red", "green", "blue"))
    """
    name: str
    values: Tuple[str, ...]


@dataclass(frozen=True)
class ValueEntry:
    """One (attribute, value) pair with all of its indices.

    Attributes:
        attr_index: Position of the attribute in the schema
        value_index: Position of the value within its attribute
        global_index: Position of the value among all m values
        attribute: Attribute name
        value: Value name
    """
    attr_index: int
    value_index: int
    global_index: int
    attribute: str
    value: str


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered catalogue of n attributes and their m total values.

    Attributes:
        attributes: Ordered attributes

    Examples:
        >>> schema = AttributeSchema.from_dict(
        ...     {"attributes": [{"name": "hair", "values": ["blond", "black"]}]}
        ... )
        >>> schema.n, schema.m
        (1, 2)
    """
    attributes: Tuple[Attribute, ...]

    def __post_init__(self) -> None:
        if not self.attributes:
            raise SchemaValidationError("Schema must define at least one attribute")

        seen = set()
        for attribute in self.attributes:
            if not attribute.name:
                raise SchemaValidationError("Attribute names must be non-empty")
            if attribute.name in seen:
                raise SchemaValidationError(f"Duplicate attribute name: {attribute.name}")
            seen.add(attribute.name)

            if len(attribute.values) < 2:
                raise SchemaValidationError(
                    f"Attribute '{attribute.name}' needs at least 2 values, "
                    f"got {len(attribute.values)}"
                )
            if len(set(attribute.values)) != len(attribute.values):
                raise SchemaValidationError(
                    f"Duplicate value names in attribute '{attribute.name}'"
                )

    @property
    def n(self) -> int:
        """Number of attributes."""
        return len(self.attributes)

    @property
    def m(self) -> int:
        """Total number of attribute values."""
        return sum(len(a.values) for a in self.attributes)

    @property
    def names(self) -> List[str]:
        """Attribute names in schema order."""
        return [a.name for a in self.attributes]

    def attribute(self, name: str) -> Attribute:
        """Get an attribute by name.

        Raises:
            SchemaLookupError: If the attribute does not exist
        """
        for attribute in self.attributes:
            if attribute.name == name:
                return attribute
        raise SchemaLookupError(f"Unknown attribute: {name}", attribute=name)

    def attr_index(self, name: str) -> int:
        """Position of an attribute in schema order.

        Raises:
            SchemaLookupError: If the attribute does not exist
        """
        for i, attribute in enumerate(self.attributes):
            if attribute.name == name:
                return i
        raise SchemaLookupError(f"Unknown attribute: {name}", attribute=name)

    def value_index(self, attribute: str, value: str) -> Tuple[int, int, int]:
        """Resolve an (attribute, value) pair to its indices.

        Args:
            attribute: Attribute name
            value: Value name

        Returns:
            Tuple of (attr_index, value_index, global_value_index)

        Raises:
            SchemaLookupError: If either name is unknown
        """
        offset = 0
        for i, attr in enumerate(self.attributes):
            if attr.name == attribute:
                if value not in attr.values:
                    raise SchemaLookupError(
                        f"Unknown value '{value}' for attribute '{attribute}'",
                        attribute=attribute,
                        value=value,
                    )
                j = attr.values.index(value)
                return i, j, offset + j
            offset += len(attr.values)
        raise SchemaLookupError(f"Unknown attribute: {attribute}", attribute=attribute)

    def entries(self) -> Iterator[ValueEntry]:
        """Iterate over all m values in fixed schema order."""
        g = 0
        for i, attr in enumerate(self.attributes):
            for j, value in enumerate(attr.values):
                yield ValueEntry(i, j, g, attr.name, value)
                g += 1

    def entry(self, global_index: int) -> ValueEntry:
        """Look up a value by its global index.

        Raises:
            SchemaLookupError: If the index is outside [0, m)
        """
        if not 0 <= global_index < self.m:
            raise SchemaLookupError(
                f"Global value index {global_index} outside [0, {self.m})"
            )
        for entry in self.entries():
            if entry.global_index == global_index:
                return entry
        raise SchemaLookupError(f"Global value index {global_index} not found")

    def validate_labels(self, labels: Mapping[str, str]) -> None:
        """Check that labels assign exactly one known value to every attribute.

        Raises:
            SchemaValidationError: If an attribute is missing or extra
            SchemaLookupError: If a value is unknown
        """
        missing = [name for name in self.names if name not in labels]
        if missing:
            raise SchemaValidationError(f"Missing labels for attributes: {', '.join(missing)}")
        extra = [name for name in labels if name not in self.names]
        if extra:
            raise SchemaValidationError(f"Labels for unknown attributes: {', '.join(extra)}")
        for name, value in labels.items():
            self.value_index(name, value)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AttributeSchema":
        """Create a schema from its JSON document form.

        Args:
            data: {"attributes": [{"name": ..., "values": [...]}, ...]}

        Raises:
            SchemaValidationError: If the document is malformed
        """
        try:
            raw = data["attributes"]
            attributes = tuple(
                Attribute(name=str(item["name"]), values=tuple(str(v) for v in item["values"]))
                for item in raw
            )
        except (KeyError, TypeError) as e:
            raise SchemaValidationError(f"Malformed schema document: {e}") from e
        return cls(attributes=attributes)

    def to_dict(self) -> Dict[str, Any]:
        """Return the JSON document form of the schema."""
        return {
            "attributes": [
                {"name": a.name, "values": list(a.values)} for a in self.attributes
            ]
        }

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON form; sensitive to attribute order."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @classmethod
    def load(cls, path: Union[str, Path]) -> "AttributeSchema":
        """Load a schema from a JSON file.

        Raises:
            SchemaValidationError: If the file cannot be read or parsed
        """
        path = Path(path)
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise SchemaValidationError(f"Failed to read schema file {path}: {e}") from e
        return cls.from_dict(data)

    def save(self, path: Union[str, Path]) -> None:
        """Write the schema as a JSON file."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")
        logger.debug(f"Schema written to {path}")


def value_index(schema: AttributeSchema, attribute: str, value: str) -> Tuple[int, int, int]:
    """Resolve (attribute, value) names to (attr_index, value_index, global_index)."""
    return schema.value_index(attribute, value)


@dataclass(frozen=True)
class SlotLayout:
    """Channel partition of the latent grid.

    The uniqueness slot occupies the first channels, then one slot per
    attribute in schema order. All slots share the same spatial grid.

    Attributes:
        spatial: (height, width) of the latent grid
        uniqueness_channels: Channels of the uniqueness slot
        attribute_channels: Channels of each attribute slot
    """
    spatial: Tuple[int, int]
    uniqueness_channels: int
    attribute_channels: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.spatial) != 2 or any(int(s) <= 0 for s in self.spatial):
            raise SchemaValidationError(f"Latent spatial dims must be positive: {self.spatial}")
        if self.uniqueness_channels <= 0:
            raise SchemaValidationError(
                f"uniqueness_channels must be positive, got {self.uniqueness_channels}"
            )
        if not self.attribute_channels:
            raise SchemaValidationError("Layout needs at least one attribute slot")
        if any(c <= 0 for c in self.attribute_channels):
            raise SchemaValidationError(
                f"attribute_channels must be positive, got {list(self.attribute_channels)}"
            )

    @property
    def n(self) -> int:
        """Number of attribute slots."""
        return len(self.attribute_channels)

    @property
    def total_channels(self) -> int:
        """Uniqueness channels plus all attribute channels."""
        return self.uniqueness_channels + sum(self.attribute_channels)

    @property
    def uniqueness_range(self) -> Tuple[int, int]:
        """Half-open channel range of the uniqueness slot."""
        return 0, self.uniqueness_channels

    def slot_range(self, attr_index: int) -> Tuple[int, int]:
        """Half-open channel range of one attribute slot.

        Raises:
            SchemaLookupError: If attr_index is outside [0, n)
        """
        if not 0 <= attr_index < self.n:
            raise SchemaLookupError(f"Attribute slot {attr_index} outside [0, {self.n})")
        start = self.uniqueness_channels + sum(self.attribute_channels[:attr_index])
        return start, start + self.attribute_channels[attr_index]

    def split_sizes(self) -> List[int]:
        """Channel sizes in partition order, suitable for ``torch.split``."""
        return [self.uniqueness_channels, *self.attribute_channels]

    def slot_shape(self, attr_index: int) -> Tuple[int, int, int]:
        """(channels, height, width) of one attribute slot."""
        start, stop = self.slot_range(attr_index)
        return stop - start, self.spatial[0], self.spatial[1]

    def to_dict(self) -> Dict[str, Any]:
        """Return a JSON-serializable form of the layout."""
        return {
            "spatial": list(self.spatial),
            "uniqueness_channels": self.uniqueness_channels,
            "attribute_channels": list(self.attribute_channels),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SlotLayout":
        """Create a layout from ``to_dict`` output."""
        return cls(
            spatial=tuple(int(s) for s in data["spatial"]),
            uniqueness_channels=int(data["uniqueness_channels"]),
            attribute_channels=tuple(int(c) for c in data["attribute_channels"]),
        )


def build_layout(
    schema: AttributeSchema,
    latent_spatial: Sequence[int],
    uniqueness_channels: int,
    per_attribute_channels: int,
) -> SlotLayout:
    """Build the slot layout for a schema with uniform attribute slot width.

    Args:
        schema: Attribute schema (n slots are allocated)
        latent_spatial: (height, width) of the latent grid
        uniqueness_channels: Channels of the uniqueness slot
        per_attribute_channels: Channels of every attribute slot

    Returns:
        SlotLayout with uniqueness first, then attributes in schema order

    Raises:
        SchemaValidationError: If any dimension is non-positive

    Examples:
        >>> layout = build_layout(schema3, (32, 32), 256, 100)
        >>> layout.total_channels
        556
    """
    if per_attribute_channels <= 0:
        raise SchemaValidationError(
            f"per_attribute_channels must be positive, got {per_attribute_channels}"
        )
    return SlotLayout(
        spatial=(int(latent_spatial[0]), int(latent_spatial[1])),
        uniqueness_channels=int(uniqueness_channels),
        attribute_channels=tuple(int(per_attribute_channels) for _ in range(schema.n)),
    )
