"""Configuration manager for slotswap."""

import copy
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from slotswap.config.defaults import DEFAULT_CONFIG, OPAQUE_FIELDS
from slotswap.data import SpriteConfig
from slotswap.exceptions import ValidationError
from slotswap.losses import LossWeights
from slotswap.nets import NetworkConfig
from slotswap.schema import AttributeSchema
from slotswap.training import TrainConfig

logger = logging.getLogger(__name__)


class ConfigError(ValidationError):
    """Exception raised for configuration errors."""
    pass


class ConfigManager:
    """Loads settings files and hands out typed views of their sections.

    Files are YAML (JSON parses through the same loader). Loaded values are
    deep-merged over ``DEFAULT_CONFIG``; keys the defaults do not know are
    rejected. A file holding only a ``sprites`` section (such as the
    ``sprites.json`` written next to a dataset) is accepted as that section.

    Attributes:
        config: Dictionary containing all configuration values
        config_path: Path to the loaded configuration file

    Examples:
        >>> config = ConfigManager.load("config.yaml")
        >>> config.get("training.batch_size")
        16
        >>> config.train_config().mode
        'instance'
    """

    def __init__(self, config: Dict[str, Any], config_path: Optional[Path] = None):
        self.config = config
        self.config_path = config_path

    @classmethod
    def load(cls, config_path: Optional[Union[str, Path]] = None) -> "ConfigManager":
        """Load configuration from a file, or use the defaults.

        Args:
            config_path: Path to a YAML or JSON settings file (optional)

        Returns:
            ConfigManager instance with merged configuration

        Raises:
            ConfigError: If the file is missing, unparsable or has unknown keys
        """
        if config_path is None:
            logger.debug("No configuration file given, using defaults")
            return cls(copy.deepcopy(DEFAULT_CONFIG))

        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"Configuration file not found: {path}")

        logger.info(f"Loading configuration from: {path}")
        config = cls._load_yaml(path)
        if cls._is_sprite_section(config):
            config = {"sprites": config}
        cls._check_unknown_keys(config, DEFAULT_CONFIG)
        return cls(cls._merge_with_defaults(config), path)

    @staticmethod
    def _is_sprite_section(config: Dict[str, Any]) -> bool:
        return "attributes" in config and set(config) <= set(DEFAULT_CONFIG["sprites"])

    @staticmethod
    def _load_yaml(path: Path) -> Dict[str, Any]:
        """Load configuration from YAML file.

        Raises:
            ConfigError: If file cannot be loaded or parsed
        """
        try:
            with open(path, "r") as f:
                config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"Failed to parse configuration: {path}\nError: {e}") from e
        except OSError as e:
            raise ConfigError(f"Failed to load configuration file: {path}\nError: {e}") from e

        if config is None:
            return {}
        if not isinstance(config, dict):
            raise ConfigError(
                f"Invalid configuration file: {path}\n"
                "Configuration must be a YAML dictionary."
            )
        return config

    @staticmethod
    def _save_yaml(config: Dict[str, Any], path: Path) -> None:
        """Save configuration to YAML file.

        Raises:
            ConfigError: If file cannot be saved
        """
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w") as f:
                yaml.dump(
                    config,
                    f,
                    default_flow_style=False,
                    sort_keys=False,
                    allow_unicode=True,
                )
        except OSError as e:
            raise ConfigError(f"Failed to save configuration to: {path}\nError: {e}") from e

    @staticmethod
    def _check_unknown_keys(
        config: Dict[str, Any],
        defaults: Dict[str, Any],
        prefix: str = "",
    ) -> None:
        """Reject keys that have no counterpart in the defaults.

        Raises:
            ConfigError: Naming the first unknown dotted key
        """
        for key, value in config.items():
            dotted = f"{prefix}{key}"
            if key not in defaults:
                raise ConfigError(f"Unknown configuration key: {dotted}")
            if dotted in OPAQUE_FIELDS:
                continue
            if isinstance(defaults[key], dict):
                if not isinstance(value, dict):
                    raise ConfigError(f"Configuration key {dotted} must be a mapping")
                ConfigManager._check_unknown_keys(value, defaults[key], f"{dotted}.")

    @staticmethod
    def _merge_with_defaults(config: Dict[str, Any]) -> Dict[str, Any]:
        """Merge loaded config with defaults; user values take precedence.

        Opaque fields are replaced wholesale so a user schema never inherits
        default attribute values.
        """
        def deep_merge(base: dict, updates: dict, prefix: str = "") -> dict:
            result = copy.deepcopy(base)
            for key, value in updates.items():
                dotted = f"{prefix}{key}"
                if (
                    key in result
                    and isinstance(result[key], dict)
                    and isinstance(value, dict)
                    and dotted not in OPAQUE_FIELDS
                ):
                    result[key] = deep_merge(result[key], value, f"{dotted}.")
                else:
                    result[key] = copy.deepcopy(value)
            return result

        return deep_merge(DEFAULT_CONFIG, config)

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value using dot notation.

        Examples:
            >>> config.get("loss.metric")
            'l1'
            >>> config.get("nonexistent.key", "default_value")
            'default_value'
        """
        value = self._get_nested_value(self.config, key)
        return value if value is not None else default

    def set(self, key: str, value: Any) -> None:
        """Set configuration value using dot notation.

        Raises:
            ConfigError: If the key is unknown
        """
        self._check_unknown_keys(self._nest(key, value), DEFAULT_CONFIG)
        self._set_nested_value(self.config, key, value)

    @staticmethod
    def _nest(key: str, value: Any) -> Dict[str, Any]:
        nested: Any = value
        for k in reversed(key.split(".")):
            nested = {k: nested}
        return nested

    @staticmethod
    def _get_nested_value(config: Dict[str, Any], key: str) -> Any:
        keys = key.split(".")
        value: Any = config
        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return None
        return value

    @staticmethod
    def _set_nested_value(config: Dict[str, Any], key: str, value: Any) -> None:
        keys = key.split(".")
        current = config
        for k in keys[:-1]:
            if k not in current or not isinstance(current[k], dict):
                current[k] = {}
            current = current[k]
        current[keys[-1]] = value

    def section(self, name: str) -> Dict[str, Any]:
        """Deep copy of one top-level section."""
        if name not in self.config:
            raise ConfigError(f"Unknown configuration section: {name}")
        return copy.deepcopy(self.config[name])

    def sprite_config(self) -> SpriteConfig:
        return SpriteConfig.from_dict(self.section("sprites"))

    def network_config(
        self,
        schema: Optional[AttributeSchema] = None,
        input_size: Optional[int] = None,
    ) -> NetworkConfig:
        """Network config for ``schema`` at ``input_size``.

        Both default to the sprite section's schema and image size.
        """
        if schema is None or input_size is None:
            sprites = self.sprite_config()
            schema = schema or sprites.schema
            input_size = input_size or sprites.image_size
        return NetworkConfig.from_section(self.section("network"), schema, input_size)

    def loss_weights(self) -> LossWeights:
        return LossWeights.from_dict(self.section("loss"))

    def train_config(self) -> TrainConfig:
        return TrainConfig.from_dict(self.section("training"), weights=self.loss_weights())

    def save(self, path: Optional[Union[str, Path]] = None) -> None:
        """Save current configuration to file.

        Raises:
            ConfigError: If path is not specified and no config was loaded
        """
        save_path = Path(path) if path else self.config_path
        if not save_path:
            raise ConfigError(
                "No configuration path specified. "
                "Provide a path or load config from a file first."
            )
        self._save_yaml(self.config, save_path)
        logger.info(f"Configuration saved to: {save_path}")

    def to_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self.config)

    def __repr__(self) -> str:
        path_str = f" from {self.config_path}" if self.config_path else ""
        return f"<ConfigManager{path_str}>"
