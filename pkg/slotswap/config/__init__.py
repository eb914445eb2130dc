"""Configuration management for slotswap."""

from slotswap.config.manager import ConfigError, ConfigManager
from slotswap.config.defaults import DEFAULT_CONFIG

__all__ = ["ConfigError", "ConfigManager", "DEFAULT_CONFIG"]
