"""Shared fixtures: a two-attribute micro schema, float64 micro networks and tiny datasets."""

import numpy as np
import pytest
import torch

from slotswap.config import ConfigManager
from slotswap.data import SpriteConfig, build_dataset
from slotswap.nets import NetworkConfig, build_models
from slotswap.schema import AttributeSchema, build_layout
from slotswap.training import TrainConfig

MICRO_SCHEMA = {
    "attributes": [
        {"name": "shape", "values": ["circle", "square"]},
        {"name": "color", "values": ["red", "blue"]},
    ]
}

MICRO_SPRITES = {
    "image_size": 16,
    "attributes": MICRO_SCHEMA["attributes"],
    "render": {
        "shape": {"circle": {"shape": "circle"}, "square": {"shape": "square"}},
        "color": {"red": {"color": [220, 40, 40]}, "blue": {"color": [40, 80, 230]}},
    },
    "jitter": {"position_fraction": 0.1, "background": [20, 80], "rotation": 10.0},
    "seed": 0,
    "defaults": {"shape": "circle", "color": [220, 40, 40], "radius": 0.3},
}


@pytest.fixture
def micro_schema() -> AttributeSchema:
    return AttributeSchema.from_dict(MICRO_SCHEMA)


@pytest.fixture
def micro_config(micro_schema) -> NetworkConfig:
    """Input 16, base width 2: a 4x4 latent grid with 4 + 2 + 2 channels."""
    return NetworkConfig(
        input_size=16,
        base_channels=2,
        layout=build_layout(micro_schema, (4, 4), 4, 2),
        discriminator_base_channels=2,
    )


@pytest.fixture
def micro_model(micro_config, micro_schema):
    return build_models(micro_config, micro_schema, init_seed=0, dtype=torch.float64)


@pytest.fixture
def micro_sprites() -> SpriteConfig:
    return SpriteConfig.from_dict(MICRO_SPRITES)


@pytest.fixture
def micro_dataset(tmp_path, micro_sprites):
    """Two images per combination: 8 images of 16x16."""
    return build_dataset(micro_sprites, 2, tmp_path / "micro")


@pytest.fixture
def micro_train_config() -> TrainConfig:
    return TrainConfig(
        iterations=2,
        batch_size=2,
        checkpoint_every=1,
        seed=0,
        dtype="float64",
    )


@pytest.fixture
def default_sprites() -> SpriteConfig:
    """The shipped 64px shape/color/size sprite configuration."""
    return ConfigManager.load().sprite_config()


@pytest.fixture
def sprite_dataset(tmp_path, default_sprites):
    """Two images per combination of the default config: 24 images of 64x64."""
    return build_dataset(default_sprites, 2, tmp_path / "sprites")


@pytest.fixture
def batch_rng() -> np.random.Generator:
    return np.random.default_rng(0)
