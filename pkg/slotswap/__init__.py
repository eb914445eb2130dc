"""slotswap - reconfigurable image translation by swapping attribute slots.

An encoder splits an image's latent code into a sample-specific uniqueness
code plus one slot per attribute. Replacing a slot (with another image's slot
or a value's average) and decoding changes that attribute and keeps the rest.
"""

from slotswap._version import __version__, __version_info__
from slotswap.config import ConfigManager
from slotswap.core import AverageVectorRegistry, Translator
from slotswap.exceptions import SlotSwapError, ValidationError
from slotswap.schema import AttributeSchema

__license__ = "MIT"
__all__ = [
    "__version__",
    "__version_info__",
    "ConfigManager",
    "AverageVectorRegistry",
    "Translator",
    "SlotSwapError",
    "ValidationError",
    "AttributeSchema",
]
