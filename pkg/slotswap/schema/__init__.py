"""Attribute schema and slot layout."""

from slotswap.schema.models import (
    Attribute,
    AttributeSchema,
    SlotLayout,
    ValueEntry,
    build_layout,
    value_index,
)
from slotswap.schema.exceptions import (
    SchemaError,
    SchemaLookupError,
    SchemaValidationError,
)

__all__ = [
    "Attribute",
    "AttributeSchema",
    "SlotLayout",
    "ValueEntry",
    "build_layout",
    "value_index",
    "SchemaError",
    "SchemaLookupError",
    "SchemaValidationError",
]
